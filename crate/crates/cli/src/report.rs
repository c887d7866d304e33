//! Run reports: a versioned JSON document plus a fixed-width text rendering.
//!
//! ```json
//! { "format": "qualitykit-report", "version": 1, "status": "ok",
//!   "reproducibility": { "seed": 2024, "config_digest": "…", "toolkit_version": "0.1.0" },
//!   "data": …, "screening": …, "models": […], "vote": …, "overrides": …,
//!   "design": …, "surface": … }
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use qualitykit::doe::{
    render_anova, render_effects, AnovaRow, DesirabilitySpec, EffectRow, ExperimentDesign, Optimum,
};
use qualitykit::ensembles::ImportanceRanking;
use qualitykit::metrics::RiskReport;
use qualitykit::screening::{OverrideOutcome, VotedSelection};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const REPORT_FORMAT: &str = "qualitykit-report";
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reproducibility {
    pub seed: u64,
    pub config_digest: String,
    pub toolkit_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSection {
    pub name: String,
    pub n_rows: usize,
    pub inputs: Vec<String>,
    pub response: Option<String>,
    pub missing_cells: usize,
    pub imputed_cells: usize,
    /// Normalized component weights when the response was composed.
    pub score_components: Option<Vec<(String, f64)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSection {
    pub test_fraction: f64,
    pub n_train: usize,
    pub n_test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningSection {
    pub k: usize,
    pub ranking: ImportanceRanking,
    pub selected: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSection {
    pub name: String,
    pub train: RiskReport,
    pub test: RiskReport,
    pub importance: Option<ImportanceRanking>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteSection {
    /// "models" or the rankings file as configured.
    pub source: String,
    pub rankings: Vec<ImportanceRanking>,
    pub voted: VotedSelection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSection {
    pub response: String,
    /// Measured responses in standard order.
    pub responses: Vec<f64>,
    pub residual_df: usize,
    pub effects: Vec<EffectRow>,
    pub anova: Vec<AnovaRow>,
    pub desirability: DesirabilitySpec,
    pub optimum: Optimum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format: String,
    pub version: u32,
    pub status: Status,
    pub failure: Option<StageFailure>,
    pub reproducibility: Reproducibility,
    pub data: Option<DataSection>,
    pub split: Option<SplitSection>,
    pub screening: Option<ScreeningSection>,
    pub models: Vec<ModelSection>,
    pub vote: Option<VoteSection>,
    pub overrides: Option<OverrideOutcome>,
    pub design: Option<ExperimentDesign>,
    pub surface: Option<SurfaceSection>,
}

impl RunReport {
    pub fn new(reproducibility: Reproducibility) -> Self {
        RunReport {
            format: REPORT_FORMAT.into(),
            version: REPORT_VERSION,
            status: Status::Ok,
            failure: None,
            reproducibility,
            data: None,
            split: None,
            screening: None,
            models: Vec::new(),
            vote: None,
            overrides: None,
            design: None,
            surface: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Writes `report.json` and `report.txt` into `dir`, creating it.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf), CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let json = dir.join("report.json");
        let text = dir.join("report.txt");
        fs::write(&json, self.to_json()).map_err(|e| CliError::io(&json, e))?;
        fs::write(&text, render_text(self)).map_err(|e| CliError::io(&text, e))?;
        Ok((json, text))
    }
}

pub(crate) fn ranking_table(out: &mut String, r: &ImportanceRanking, limit: usize) {
    let w = r
        .entries
        .iter()
        .map(|e| e.variable.chars().count())
        .max()
        .unwrap_or(8)
        .max(8);
    writeln!(
        out,
        "  {:>4}  {:<w$}  {:>10}",
        "rank", "variable", "importance"
    )
    .unwrap();
    for (i, e) in r.entries.iter().take(limit).enumerate() {
        writeln!(out, "  {:>4}  {:<w$}  {:>10.4}", i + 1, e.variable, e.score).unwrap();
    }
}

/// Ranking rendered on its own, for one-off commands.
pub fn ranking_text(r: &ImportanceRanking, limit: usize) -> String {
    let mut out = String::new();
    ranking_table(&mut out, r, limit);
    out
}

pub(crate) fn design_table(out: &mut String, d: &ExperimentDesign, responses: Option<&[f64]>) {
    write!(out, "{:>14}  {:>6}", "Standard run", "Blocks").unwrap();
    for f in d.factors() {
        write!(out, "  {:>20}", f.name).unwrap();
    }
    if responses.is_some() {
        write!(out, "  {:>12}", "Response").unwrap();
    }
    out.push('\n');
    for (i, r) in d.runs().iter().enumerate() {
        let label = if r.is_center() {
            format!("{} (C)", r.standard_order)
        } else {
            r.standard_order.to_string()
        };
        write!(out, "{label:>14}  {:>6}", r.block).unwrap();
        for v in &r.natural {
            write!(out, "  {v:>20.6}").unwrap();
        }
        if let Some(ys) = responses {
            write!(out, "  {:>12}", ys[i]).unwrap();
        }
        out.push('\n');
    }
}

fn heading(out: &mut String, title: &str) {
    writeln!(out, "\n== {title} ==").unwrap();
}

/// Human-readable rendering of a run report.
pub fn render_text(r: &RunReport) -> String {
    let mut out = String::new();
    let status = match r.status {
        Status::Ok => "OK",
        Status::Failed => "FAILED",
    };
    writeln!(out, "qualitykit pipeline report: {status}").unwrap();
    let rep = &r.reproducibility;
    writeln!(
        out,
        "seed {}  config sha256 {}  version {}",
        rep.seed, rep.config_digest, rep.toolkit_version
    )
    .unwrap();
    if let Some(f) = &r.failure {
        writeln!(out, "FAILED in stage '{}': {}", f.stage, f.message).unwrap();
    }
    if let Some(d) = &r.data {
        heading(&mut out, "Data");
        writeln!(
            out,
            "{}: {} rows, {} inputs",
            d.name,
            d.n_rows,
            d.inputs.len()
        )
        .unwrap();
        writeln!(
            out,
            "response: {}",
            d.response.as_deref().unwrap_or("(none)")
        )
        .unwrap();
        writeln!(
            out,
            "missing cells: {}, imputed: {}",
            d.missing_cells, d.imputed_cells
        )
        .unwrap();
        if let Some(parts) = &d.score_components {
            for (name, w) in parts {
                writeln!(out, "  score component {name}: weight {w:.6}").unwrap();
            }
        }
    }
    if let Some(s) = &r.split {
        writeln!(
            out,
            "train/test split: {} / {} (test fraction {})",
            s.n_train, s.n_test, s.test_fraction
        )
        .unwrap();
    }
    if let Some(s) = &r.screening {
        heading(&mut out, &format!("Predictor screening (top {})", s.k));
        ranking_table(&mut out, &s.ranking, s.ranking.entries.len());
        writeln!(out, "selected: {}", s.selected.join(", ")).unwrap();
    }
    if !r.models.is_empty() {
        heading(&mut out, "Model risk (mean squared error)");
        writeln!(
            out,
            "{:<16}  {:>12}  {:>12}  {:>12}  {:>12}",
            "model", "train risk", "train SE", "test risk", "test SE"
        )
        .unwrap();
        for m in &r.models {
            writeln!(
                out,
                "{:<16}  {:>12.6}  {:>12.6}  {:>12.6}  {:>12.6}",
                m.name,
                m.train.risk_estimate,
                m.train.standard_error,
                m.test.risk_estimate,
                m.test.standard_error
            )
            .unwrap();
        }
        for m in &r.models {
            if let Some(imp) = &m.importance {
                writeln!(out, "\n{} importance:", m.name).unwrap();
                ranking_table(&mut out, imp, 10);
            }
        }
    }
    if let Some(v) = &r.vote {
        heading(
            &mut out,
            &format!("Vote (top {} per model, source: {})", v.voted.m, v.source),
        );
        writeln!(
            out,
            "  {:>4}  {:<24}  {:>6}  {:>5}  models",
            "rank", "variable", "count", "borda"
        )
        .unwrap();
        for (i, e) in v.voted.entries.iter().enumerate() {
            writeln!(
                out,
                "  {:>4}  {:<24}  {:>6}  {:>5}  {}",
                i + 1,
                e.name,
                e.count(),
                e.borda,
                e.models.join("; ")
            )
            .unwrap();
        }
    }
    if let Some(o) = &r.overrides {
        heading(&mut out, "Overrides");
        writeln!(out, "voted: {}", o.before.join(", ")).unwrap();
        for rule in &o.applied {
            writeln!(
                out,
                "  replace {} with {}: {}",
                rule.remove, rule.insert, rule.justification
            )
            .unwrap();
        }
        writeln!(out, "final factors: {}", o.selected.join(", ")).unwrap();
    }
    if let Some(d) = &r.design {
        heading(
            &mut out,
            &format!("Design ({} runs, {} center)", d.n_runs(), d.n_center()),
        );
        for f in d.factors() {
            writeln!(
                out,
                "  {}: low {} center {} high {}",
                f.name, f.low, f.center, f.high
            )
            .unwrap();
        }
        design_table(
            &mut out,
            d,
            r.surface.as_ref().map(|s| s.responses.as_slice()),
        );
    }
    if let Some(s) = &r.surface {
        heading(&mut out, &format!("Effects ({})", s.response));
        out.push_str(&render_effects(&s.effects, s.residual_df));
        heading(&mut out, "ANOVA");
        out.push_str(&render_anova(&s.anova));
        heading(&mut out, "Desirability optimum");
        writeln!(
            out,
            "ramp lo {:.6} hi {:.6} shape {}",
            s.desirability.lo, s.desirability.hi, s.desirability.shape
        )
        .unwrap();
        if let Some(d) = &r.design {
            for ((f, n), c) in d
                .factors()
                .iter()
                .zip(&s.optimum.natural)
                .zip(&s.optimum.coded)
            {
                writeln!(out, "  {}: {n:.6} (coded {c:.6})", f.name).unwrap();
            }
        }
        writeln!(
            out,
            "predicted {:.6}, desirability {:.6}",
            s.optimum.prediction, s.optimum.desirability
        )
        .unwrap();
    }
    out
}
