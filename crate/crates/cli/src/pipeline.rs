//! ingest → impute → compose score → split → screen → fit models → risk
//! reports → vote → overrides → design → surface fit and desirability.

use std::collections::HashMap;
use std::fs::File;
use std::path::Path;

use qualitykit::data::{
    compose_quality_score, impute_missing, load_table, split_train_test, Dataset, QualityScoreSpec,
    Role,
};
use qualitykit::doe::{
    build_ccf_design, desirability_optimize, fit_response_surface, read_design, DesirabilitySpec,
    Factor,
};
use qualitykit::ensembles::{
    fit_baseline, fit_boosted_trees, fit_random_forest, variable_importance, BaselineKind,
    ForestConfig, ImportanceRanking, Regressor, TreeConfig,
};
use qualitykit::metrics::{risk_report, Split};
use qualitykit::screening::{apply_overrides, screen_predictors_with, vote_rankings};
use qualitykit::synth::generate_synthetic;

use crate::config::PipelineConfig;
use crate::report::{
    DataSection, ModelSection, Reproducibility, RunReport, ScreeningSection, SplitSection,
    StageFailure, Status, SurfaceSection, VoteSection,
};
use crate::tables::{read_levels, read_rankings, read_reference};
use crate::VERSION;

type StageResult<T> = Result<T, String>;

fn open(cfg: &PipelineConfig, p: &Path) -> StageResult<File> {
    File::open(cfg.resolve(p)).map_err(|e| format!("{}: {e}", p.display()))
}

/// Runs every stage in order. A failing stage stops the run; the report then
/// carries the sections completed so far and a FAILED status naming the stage.
pub fn run_pipeline(cfg: &PipelineConfig) -> RunReport {
    let mut report = RunReport::new(Reproducibility {
        seed: cfg.seed,
        config_digest: cfg.digest(),
        toolkit_version: VERSION.to_string(),
    });
    if let Err((stage, message)) = (Runner {
        cfg,
        report: &mut report,
    })
    .run()
    {
        report.status = Status::Failed;
        report.failure = Some(StageFailure {
            stage: stage.to_string(),
            message,
        });
    }
    report
}

struct Runner<'a> {
    cfg: &'a PipelineConfig,
    report: &'a mut RunReport,
}

fn tag<T>(stage: &'static str, r: StageResult<T>) -> Result<T, (&'static str, String)> {
    r.map_err(|m| (stage, m))
}

impl Runner<'_> {
    fn run(&mut self) -> Result<(), (&'static str, String)> {
        let data = tag("ingest", self.ingest())?;
        let data = tag("impute", self.impute(data))?;
        let data = tag("score", self.score(data))?;
        let (train, test) = tag("split", self.split(&data))?;
        let (train, test) = tag("screen", self.screen(&train, &test))?;
        let rankings = tag("models", self.models(&train, &test))?;
        let selected = tag("vote", self.vote(rankings))?;
        if self.cfg.doe.enabled {
            tag("design", self.design(&data, &selected))?;
        }
        Ok(())
    }

    fn ingest(&mut self) -> StageResult<Dataset> {
        let input = &self.cfg.input;
        let d = match (&input.path, &input.synthetic) {
            (Some(p), _) => {
                load_table(open(self.cfg, p)?, &input.schema).map_err(|e| e.to_string())?
            }
            (None, Some(s)) => {
                generate_synthetic(s.n_rows, s.n_noise_vars, s.noise_sd, self.cfg.seed)
                    .map_err(|e| e.to_string())?
            }
            (None, None) => return Err("no input configured".into()),
        };
        self.report.data = Some(DataSection {
            name: d.name.clone(),
            n_rows: d.n_rows(),
            inputs: d.input_names(),
            response: d.response().map(|c| c.name.clone()),
            missing_cells: d.masked_count(),
            imputed_cells: 0,
            score_components: None,
        });
        Ok(d)
    }

    fn impute(&mut self, d: Dataset) -> StageResult<Dataset> {
        let missing = d.masked_count();
        if missing == 0 {
            return Ok(d);
        }
        let reference = match &self.cfg.impute.reference {
            Some(p) => Some(read_reference(open(self.cfg, p)?)?),
            None => None,
        };
        let out = impute_missing(&d, self.cfg.impute.strategy, reference.as_ref())
            .map_err(|e| e.to_string())?;
        if let Some(s) = self.report.data.as_mut() {
            s.imputed_cells = missing;
        }
        Ok(out)
    }

    fn score(&mut self, d: Dataset) -> StageResult<Dataset> {
        let d = match &self.cfg.score {
            None => d,
            Some(sc) => {
                let spec = match &sc.weights {
                    None => QualityScoreSpec::equal_weights(&sc.components, sc.output_name.clone()),
                    Some(w) if w.len() == sc.components.len() => QualityScoreSpec {
                        components: sc
                            .components
                            .iter()
                            .cloned()
                            .zip(w.iter().copied())
                            .collect(),
                        output_name: sc.output_name.clone(),
                    },
                    Some(w) => {
                        return Err(format!(
                            "{} weights for {} components",
                            w.len(),
                            sc.components.len()
                        ))
                    }
                };
                let weights = spec.normalized_weights().map_err(|e| e.to_string())?;
                let scored = compose_quality_score(&d, &spec).map_err(|e| e.to_string())?;
                // the response is built from its components, so they cannot be predictors
                let roles: HashMap<String, Role> = sc
                    .components
                    .iter()
                    .map(|c| (c.clone(), Role::Ignored))
                    .collect();
                let out = scored.with_roles(&roles).map_err(|e| e.to_string())?;
                if let Some(s) = self.report.data.as_mut() {
                    s.inputs = out.input_names();
                    s.response = Some(sc.output_name.clone());
                    s.score_components = Some(sc.components.iter().cloned().zip(weights).collect());
                }
                out
            }
        };
        if d.response().is_none() {
            return Err(
                "dataset has no response column (set a schema role or a score section)".into(),
            );
        }
        Ok(d)
    }

    fn split(&mut self, d: &Dataset) -> StageResult<(Dataset, Dataset)> {
        let frac = self.cfg.split.test_fraction;
        let (train, test) = split_train_test(d, frac, self.cfg.seed).map_err(|e| e.to_string())?;
        self.report.split = Some(SplitSection {
            test_fraction: frac,
            n_train: train.n_rows(),
            n_test: test.n_rows(),
        });
        Ok((train, test))
    }

    /// Screens on the training rows; both splits keep only the selected inputs.
    fn screen(&mut self, train: &Dataset, test: &Dataset) -> StageResult<(Dataset, Dataset)> {
        let sc = &self.cfg.screening;
        let forest = ForestConfig {
            n_trees: sc.n_trees,
            tree: TreeConfig {
                min_rows_per_leaf: sc.min_rows_per_leaf,
                ..TreeConfig::default()
            },
            seed: self.cfg.seed,
            ..ForestConfig::default()
        };
        let s = screen_predictors_with(train, sc.k, &forest).map_err(|e| e.to_string())?;
        let selected: Vec<String> = s
            .selected
            .top(sc.k)
            .into_iter()
            .map(str::to_string)
            .collect();
        let roles: HashMap<String, Role> = test
            .input_names()
            .into_iter()
            .filter(|n| !selected.contains(n))
            .map(|n| (n, Role::Ignored))
            .collect();
        let test = test.with_roles(&roles).map_err(|e| e.to_string())?;
        self.report.screening = Some(ScreeningSection {
            k: sc.k,
            ranking: s.ranking,
            selected,
        });
        Ok((s.dataset, test))
    }

    fn models(&mut self, train: &Dataset, test: &Dataset) -> StageResult<Vec<ImportanceRanking>> {
        let m = &self.cfg.models;
        let seed = self.cfg.seed;
        let mut rankings = Vec::new();

        let forest = fit_random_forest(
            train,
            &ForestConfig {
                seed,
                ..m.forest.clone()
            },
        )
        .map_err(|e| e.to_string())?;
        let imp = variable_importance(&forest, "random forest");
        self.record("random forest", &forest, train, test, Some(imp.clone()))?;
        rankings.push(imp);

        let boosted = fit_boosted_trees(
            train,
            &qualitykit::ensembles::BoostConfig {
                seed,
                ..m.boosting.clone()
            },
        )
        .map_err(|e| e.to_string())?;
        let imp = variable_importance(&boosted, "boosted tree");
        self.record("boosted tree", &boosted, train, test, Some(imp.clone()))?;
        rankings.push(imp);

        if let Some(k) = m.knn_k {
            let knn = fit_baseline(train, BaselineKind::Knn { k }).map_err(|e| e.to_string())?;
            self.record("knn", &knn, train, test, None)?;
        }
        if m.ols {
            let ols = fit_baseline(train, BaselineKind::Ols).map_err(|e| e.to_string())?;
            self.record("ols", &ols, train, test, None)?;
        }
        Ok(rankings)
    }

    fn record(
        &mut self,
        name: &str,
        model: &dyn Regressor,
        train: &Dataset,
        test: &Dataset,
        importance: Option<ImportanceRanking>,
    ) -> StageResult<()> {
        let risk = |d: &Dataset, split| {
            let pred = model.predict_dataset(d).map_err(|e| e.to_string())?;
            let (_, actual) = d.dense_response().map_err(|e| e.to_string())?;
            risk_report(&pred, actual, split).map_err(|e| e.to_string())
        };
        self.report.models.push(ModelSection {
            name: name.to_string(),
            train: risk(train, Split::Train)?,
            test: risk(test, Split::Test)?,
            importance,
        });
        Ok(())
    }

    fn vote(&mut self, model_rankings: Vec<ImportanceRanking>) -> StageResult<Vec<String>> {
        let v = &self.cfg.vote;
        let (source, rankings) = match &v.rankings {
            Some(p) => (p.display().to_string(), read_rankings(open(self.cfg, p)?)?),
            None => ("models".to_string(), model_rankings),
        };
        let voted = vote_rankings(&rankings, v.m).map_err(|e| e.to_string())?;
        let outcome =
            apply_overrides(&voted, &v.overrides, v.final_count).map_err(|e| e.to_string())?;
        let selected = outcome.selected.clone();
        self.report.vote = Some(VoteSection {
            source,
            rankings,
            voted,
        });
        self.report.overrides = Some(outcome);
        Ok(selected)
    }

    fn design(&mut self, data: &Dataset, selected: &[String]) -> StageResult<()> {
        let doe = &self.cfg.doe;
        let measured = match &doe.responses {
            Some(p) => {
                let name = doe.response.as_deref().ok_or("doe.response is not set")?;
                Some(read_design(open(self.cfg, p)?, Some(name), None).map_err(|e| e.to_string())?)
            }
            None => None,
        };
        // factor order follows the measured design when there is one
        let order: Vec<String> = match &measured {
            Some(t) => t.design.factors().iter().map(|f| f.name.clone()).collect(),
            None => selected.to_vec(),
        };
        let mut want = selected.to_vec();
        want.sort();
        let mut have = order.clone();
        have.sort();
        if want != have {
            return Err(format!(
                "design file factors {order:?} differ from the selected factors {selected:?}"
            ));
        }

        let listed: Option<Vec<Factor>> = match (&doe.factors, &doe.levels) {
            (Some(f), _) => Some(f.clone()),
            (None, Some(p)) => Some(read_levels(open(self.cfg, p)?)?),
            (None, None) => None,
        };
        let factors = order
            .iter()
            .map(|name| match &listed {
                Some(list) => list
                    .iter()
                    .find(|f| f.name == *name)
                    .cloned()
                    .ok_or_else(|| format!("no levels given for factor '{name}'")),
                None => derive_factor(data, name, doe.derive_percentiles),
            })
            .collect::<StageResult<Vec<_>>>()?;
        let design = build_ccf_design(&factors, doe.n_center).map_err(|e| e.to_string())?;
        self.report.design = Some(design.clone());

        let Some(table) = measured else { return Ok(()) };
        if table.design.n_runs() != design.n_runs() {
            return Err(format!(
                "design file has {} runs, the generated design {}",
                table.design.n_runs(),
                design.n_runs()
            ));
        }
        for (gen, got) in design.runs().iter().zip(table.design.runs()) {
            let same_levels = gen
                .natural
                .iter()
                .zip(&got.natural)
                .all(|(a, b)| (a - b).abs() <= 1e-9 * a.abs().max(1.0));
            if gen.standard_order != got.standard_order || gen.block != got.block || !same_levels {
                return Err(format!(
                    "design file run {} does not match the generated run {}",
                    got.standard_order, gen.standard_order
                ));
            }
        }
        let responses = table.responses.unwrap_or_default();
        let fit = fit_response_surface(&design, &responses).map_err(|e| e.to_string())?;
        let spec = match doe.desirability {
            Some(s) => s,
            None => DesirabilitySpec::from_responses(&responses).map_err(|e| e.to_string())?,
        };
        let optimum = desirability_optimize(&fit, &spec).map_err(|e| e.to_string())?;
        self.report.surface = Some(SurfaceSection {
            response: table.response_name.unwrap_or_default(),
            responses,
            residual_df: fit.residual_df(),
            effects: fit.effects,
            anova: fit.anova,
            desirability: spec,
            optimum,
        });
        Ok(())
    }
}

/// Linear-interpolated percentile of the sorted observed values.
fn percentile(sorted: &[f64], pct: f64) -> f64 {
    let pos = pct / 100.0 * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

fn derive_factor(d: &Dataset, name: &str, [lo, hi]: [f64; 2]) -> StageResult<Factor> {
    let col = d
        .dense_column(name)
        .map_err(|e| format!("cannot derive levels for '{name}': {e}"))?;
    if col.is_empty() {
        return Err(format!("cannot derive levels for '{name}': no rows"));
    }
    let mut v = col.to_vec();
    v.sort_by(f64::total_cmp);
    let (low, high) = (percentile(&v, lo), percentile(&v, hi));
    Factor::from_range(name, low, high).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 100.0), 5.0);
        assert_eq!(percentile(&v, 50.0), 3.0);
        assert!((percentile(&v, 10.0) - 1.4).abs() < 1e-12);
    }
}
