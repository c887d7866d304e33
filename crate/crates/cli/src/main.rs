use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qualitykit::data::{load_table, write_table, Dataset, Role, Schema};
use qualitykit::doe::{
    build_ccf_design, desirability_optimize, fit_response_surface, read_design, render_anova,
    render_effects, write_design, DesirabilitySpec,
};
use qualitykit::ensembles::{
    fit_baseline, fit_boosted_trees, fit_random_forest, fit_regression_tree, load_model,
    save_model, variable_importance, BaselineKind, BoostConfig, ForestConfig, SavedModel,
    TreeConfig,
};
use qualitykit::metrics::{risk_report, Split};
use qualitykit::screening::{apply_overrides, screen_predictors_with, vote_rankings, OverrideRule};
use qualitykit_cli::pipeline::run_pipeline;
use qualitykit_cli::report::{ranking_text, Status};
use qualitykit_cli::reproduce::reproduce_paper;
use qualitykit_cli::tables::{self, read_levels, read_rankings};
use qualitykit_cli::{generate_synthetic, CliError, PipelineConfig};

#[derive(Parser)]
#[command(
    name = "qualitykit",
    version,
    about = "Predictor screening, tree ensembles and designed experiments for process quality data"
)]
struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; also read from QUALITYKIT_OUT.
    #[arg(long, global = true, env = "QUALITYKIT_OUT")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured stage and write report.json and report.txt.
    Pipeline {
        /// Run the bundled case-study configuration instead of --config.
        #[arg(long)]
        bundled: bool,
    },
    /// Rank the inputs of a table by forest importance and keep the top k.
    Screen {
        #[command(flatten)]
        table: TableArgs,
        #[arg(long, default_value_t = 16)]
        k: usize,
        #[arg(long, default_value_t = 200)]
        n_trees: usize,
    },
    /// Fit one model on a table and save it as JSON.
    Train {
        #[command(flatten)]
        table: TableArgs,
        #[arg(long, value_enum, default_value_t = ModelKind::Forest)]
        model: ModelKind,
        /// Where to save the model file.
        #[arg(long)]
        save: PathBuf,
        /// Neighbours for the knn model.
        #[arg(long, default_value_t = 5)]
        knn_k: usize,
    },
    /// Predict a table's rows with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Borda-vote rank lists (`model,rank,variable`) and apply overrides.
    Vote {
        #[arg(long)]
        rankings: PathBuf,
        #[arg(long, default_value_t = 4)]
        m: usize,
        #[arg(long, default_value_t = 3)]
        final_count: usize,
        /// `REMOVE=INSERT:JUSTIFICATION`, repeatable.
        #[arg(long = "override", value_parser = parse_override)]
        overrides: Vec<OverrideRule>,
    },
    /// Write the blocked face-centered design for three factors as CSV.
    DoeGen {
        /// `factor,low,center,high` levels file; the bundled levels by default.
        #[arg(long)]
        levels: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        n_center: usize,
    },
    /// Fit the quadratic surface to a design CSV with responses.
    DoeFit {
        #[arg(long)]
        design: PathBuf,
        #[arg(long)]
        response: String,
        /// Levels file pinning factor centers; inferred from the runs otherwise.
        #[arg(long)]
        levels: Option<PathBuf>,
    },
    /// Generate the synthetic screening dataset as CSV.
    Synth {
        #[arg(long, default_value_t = 2000)]
        rows: usize,
        #[arg(long, default_value_t = 68)]
        noise_vars: usize,
        #[arg(long, default_value_t = 0.01)]
        noise_sd: f64,
    },
    /// Check the design, effects, ANOVA, equation and voting results against
    /// the bundled case-study tables.
    ReproducePaper,
}

#[derive(clap::Args)]
struct TableArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Response column; every other column is an input unless ignored.
    #[arg(long)]
    response: String,
    /// Columns to leave out, repeatable.
    #[arg(long)]
    ignore: Vec<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    Tree,
    Forest,
    Boosted,
    Knn,
    Ols,
}

fn parse_override(s: &str) -> Result<OverrideRule, String> {
    let (pair, justification) = s
        .split_once(':')
        .ok_or("expected REMOVE=INSERT:JUSTIFICATION")?;
    let (remove, insert) = pair
        .split_once('=')
        .ok_or("expected REMOVE=INSERT:JUSTIFICATION")?;
    Ok(OverrideRule {
        remove: remove.trim().into(),
        insert: insert.trim().into(),
        justification: justification.trim().into(),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn stage(stage: &str) -> impl Fn(String) -> CliError + '_ {
    move |message| CliError::Stage {
        stage: stage.to_string(),
        message,
    }
}

fn emit(cli_format: Format, text: &str, json: &str) {
    let mut stdout = io::stdout().lock();
    let body = match cli_format {
        Format::Text => text,
        Format::Structured => json,
    };
    // a closed pipe is not an error worth reporting
    let _ = stdout.write_all(body.as_bytes());
}

fn write_file(dir: &Path, name: &str, body: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, body).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|e| io_err(path, e))
}

fn load_config(cli: &Cli) -> Result<Option<PipelineConfig>, CliError> {
    cli.config
        .as_deref()
        .map(PipelineConfig::from_path)
        .transpose()
}

/// Seed precedence: --seed, then the config file, then 0.
fn seed(cli: &Cli, cfg: Option<&PipelineConfig>) -> u64 {
    cli.seed.or(cfg.map(|c| c.seed)).unwrap_or(0)
}

fn load(table: &TableArgs) -> Result<Dataset, CliError> {
    let mut schema = Schema::with_default(Role::Input).role(&table.response, Role::Response);
    for name in &table.ignore {
        schema = schema.role(name, Role::Ignored);
    }
    load_table(open(&table.data)?, &schema).map_err(|e| stage("ingest")(e.to_string()))
}

fn json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = load_config(&cli)?;
    let seed = seed(&cli, cfg.as_ref());
    match &cli.command {
        Command::Pipeline { bundled } => pipeline(&cli, cfg, *bundled),
        Command::Screen { table, k, n_trees } => {
            let d = load(table)?;
            let forest = ForestConfig {
                n_trees: *n_trees,
                seed,
                ..ForestConfig::default()
            };
            let s = screen_predictors_with(&d, *k, &forest)
                .map_err(|e| stage("screen")(e.to_string()))?;
            let text = ranking_text(&s.ranking, *k);
            emit(cli.format, &text, &json(&s.selected));
            if let Some(dir) = &cli.out {
                write_file(dir, "screening.json", &json(&s.ranking))?;
            }
            Ok(())
        }
        Command::Train {
            table,
            model,
            save,
            knn_k,
        } => {
            let d = load(table)?;
            let fail = |e: qualitykit::ensembles::EnsembleError| stage("train")(e.to_string());
            let saved = match model {
                ModelKind::Tree => SavedModel::Tree(
                    fit_regression_tree(
                        &d,
                        &TreeConfig {
                            min_rows_per_leaf: 5,
                            ..TreeConfig::default()
                        },
                        None,
                        seed,
                    )
                    .map_err(fail)?,
                ),
                ModelKind::Forest => SavedModel::Forest(
                    fit_random_forest(
                        &d,
                        &ForestConfig {
                            seed,
                            ..ForestConfig::default()
                        },
                    )
                    .map_err(fail)?,
                ),
                ModelKind::Boosted => SavedModel::Boosted(
                    fit_boosted_trees(
                        &d,
                        &BoostConfig {
                            seed,
                            ..BoostConfig::default()
                        },
                    )
                    .map_err(fail)?,
                ),
                ModelKind::Knn => SavedModel::Baseline(
                    fit_baseline(&d, BaselineKind::Knn { k: *knn_k }).map_err(fail)?,
                ),
                ModelKind::Ols => {
                    SavedModel::Baseline(fit_baseline(&d, BaselineKind::Ols).map_err(fail)?)
                }
            };
            let m = saved.as_regressor();
            let pred = m.predict_dataset(&d).map_err(fail)?;
            let (_, y) = d
                .dense_response()
                .map_err(|e| stage("train")(e.to_string()))?;
            let risk =
                risk_report(&pred, y, Split::Train).map_err(|e| stage("train")(e.to_string()))?;
            let file = File::create(save).map_err(|e| io_err(save, e))?;
            save_model(&saved, io::BufWriter::new(file)).map_err(fail)?;
            let mut text = format!(
                "saved {}\ntrain mse {:.6} (se {:.6})\n",
                save.display(),
                risk.risk_estimate,
                risk.standard_error
            );
            let importance = match &saved {
                SavedModel::Tree(t) => Some(variable_importance(t, "tree")),
                SavedModel::Forest(f) => Some(variable_importance(f, "random forest")),
                SavedModel::Boosted(b) => Some(variable_importance(b, "boosted tree")),
                SavedModel::Baseline(_) => None,
            };
            if let Some(r) = &importance {
                text.push_str(&ranking_text(r, r.entries.len()));
            }
            emit(cli.format, &text, &json(&(risk, importance)));
            Ok(())
        }
        Command::Predict { model, data } => {
            let saved = load_model(open(model)?).map_err(|e| stage("predict")(e.to_string()))?;
            let m = saved.as_regressor();
            let d = load_table(open(data)?, &Schema::with_default(Role::Input))
                .map_err(|e| stage("ingest")(e.to_string()))?;
            let pred = m
                .predict_dataset(&d)
                .map_err(|e| stage("predict")(e.to_string()))?;
            let text: String = std::iter::once("prediction\n".to_string())
                .chain(pred.iter().map(|p| format!("{p}\n")))
                .collect();
            emit(cli.format, &text, &json(&pred));
            Ok(())
        }
        Command::Vote {
            rankings,
            m,
            final_count,
            overrides,
        } => {
            let r = read_rankings(open(rankings)?).map_err(stage("vote"))?;
            let voted = vote_rankings(&r, *m).map_err(|e| stage("vote")(e.to_string()))?;
            let outcome = apply_overrides(&voted, overrides, *final_count)
                .map_err(|e| stage("overrides")(e.to_string()))?;
            let mut text = String::new();
            for (i, v) in voted.entries.iter().enumerate() {
                text.push_str(&format!(
                    "{:>2}. {} (models {}, borda {})\n",
                    i + 1,
                    v.name,
                    v.count(),
                    v.borda
                ));
            }
            text.push_str(&format!("selected: {}\n", outcome.selected.join(", ")));
            emit(cli.format, &text, &json(&(voted, outcome)));
            Ok(())
        }
        Command::DoeGen { levels, n_center } => {
            let factors = match levels {
                Some(p) => read_levels(open(p)?),
                None => read_levels(tables::LEVELS_CSV.as_bytes()),
            }
            .map_err(stage("design"))?;
            let design = build_ccf_design(&factors, *n_center)
                .map_err(|e| stage("design")(e.to_string()))?;
            let mut csv = Vec::new();
            write_design(&design, None, &mut csv).map_err(|e| stage("design")(e.to_string()))?;
            let csv = String::from_utf8(csv).expect("csv is utf-8");
            emit(cli.format, &csv, &json(&design));
            if let Some(dir) = &cli.out {
                write_file(dir, "design.csv", &csv)?;
            }
            Ok(())
        }
        Command::DoeFit {
            design,
            response,
            levels,
        } => {
            let factors = levels
                .as_deref()
                .map(|p| read_levels(open(p)?).map_err(stage("design")))
                .transpose()?;
            let table = read_design(open(design)?, Some(response), None)
                .map_err(|e| stage("design")(e.to_string()))?;
            let design = match factors {
                None => table.design,
                Some(list) => {
                    let ordered = table
                        .design
                        .factors()
                        .iter()
                        .map(|f| list.iter().find(|l| l.name == f.name).cloned())
                        .collect::<Option<Vec<_>>>()
                        .ok_or_else(|| {
                            stage("design")("levels do not cover the design factors".into())
                        })?;
                    read_design(open(design)?, Some(response), Some(&ordered))
                        .map_err(|e| stage("design")(e.to_string()))?
                        .design
                }
            };
            let ys = table.responses.unwrap_or_default();
            let fit =
                fit_response_surface(&design, &ys).map_err(|e| stage("surface")(e.to_string()))?;
            let spec = DesirabilitySpec::from_responses(&ys)
                .map_err(|e| stage("surface")(e.to_string()))?;
            let opt =
                desirability_optimize(&fit, &spec).map_err(|e| stage("surface")(e.to_string()))?;
            let mut text = render_effects(&fit.effects, fit.residual_df());
            text.push('\n');
            text.push_str(&render_anova(&fit.anova));
            text.push_str(&format!(
                "\noptimum: {} -> {:.6} (desirability {:.4})\n",
                design
                    .factors()
                    .iter()
                    .zip(&opt.natural)
                    .map(|(f, v)| format!("{} = {v:.6}", f.name))
                    .collect::<Vec<_>>()
                    .join(", "),
                opt.prediction,
                opt.desirability
            ));
            emit(cli.format, &text, &json(&(&fit, &opt)));
            Ok(())
        }
        Command::Synth {
            rows,
            noise_vars,
            noise_sd,
        } => {
            let d = generate_synthetic(*rows, *noise_vars, *noise_sd, seed)
                .map_err(|e| stage("synth")(e.to_string()))?;
            let mut csv = Vec::new();
            write_table(&d, &mut csv, None).map_err(|e| stage("synth")(e.to_string()))?;
            let csv = String::from_utf8(csv).expect("csv is utf-8");
            match &cli.out {
                Some(dir) => {
                    let p = write_file(dir, "synthetic.csv", &csv)?;
                    eprintln!("wrote {}", p.display());
                }
                None => emit(Format::Text, &csv, ""),
            }
            Ok(())
        }
        Command::ReproducePaper => {
            let r = reproduce_paper();
            let js = r.to_json();
            emit(cli.format, &r.render_text(), &js);
            if let Some(dir) = &cli.out {
                write_file(dir, "reproduction.json", &js)?;
                write_file(dir, "reproduction.txt", &r.render_text())?;
            }
            r.into_result().map(|_| ())
        }
    }
}

fn pipeline(cli: &Cli, cfg: Option<PipelineConfig>, bundled: bool) -> Result<(), CliError> {
    let mut cfg = match (bundled, cfg) {
        (true, Some(_)) => {
            return Err(CliError::Config(
                "--bundled and --config are exclusive".into(),
            ))
        }
        (true, None) => {
            // the bundled tables are written next to the report so the run is
            // self-contained
            let data_dir = cli
                .out
                .clone()
                .unwrap_or_else(|| "qualitykit-case-study".into())
                .join("data");
            for (name, body) in [
                ("rankings.csv", tables::RANKINGS_CSV),
                ("levels.csv", tables::LEVELS_CSV),
                ("design.csv", tables::DESIGN_CSV),
                ("case_study.toml", tables::CASE_STUDY_CONFIG),
            ] {
                write_file(&data_dir, name, body)?;
            }
            PipelineConfig::parse(tables::CASE_STUDY_CONFIG, &data_dir)?
        }
        (false, Some(c)) => c,
        (false, None) => {
            return Err(CliError::Config(
                "pipeline needs --config or --bundled".into(),
            ))
        }
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let out = cli
        .out
        .clone()
        .unwrap_or_else(|| cfg.resolve(&cfg.output_dir));
    let report = run_pipeline(&cfg);
    report.write(&out)?;
    emit(
        cli.format,
        &qualitykit_cli::report::render_text(&report),
        &report.to_json(),
    );
    match (report.status, report.failure) {
        (Status::Ok, _) => Ok(()),
        (Status::Failed, Some(f)) => Err(CliError::Stage {
            stage: f.stage,
            message: f.message,
        }),
        (Status::Failed, None) => Err(CliError::Stage {
            stage: "unknown".into(),
            message: "run failed".into(),
        }),
    }
}
