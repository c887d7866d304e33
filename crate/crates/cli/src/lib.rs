//! Orchestration for qualitykit: the configured end-to-end pipeline, run
//! reports, the bundled case-study tables and the reproduction check.

pub mod config;
pub mod pipeline;
pub mod report;
pub mod reproduce;
pub mod tables;

pub use config::PipelineConfig;
pub use pipeline::run_pipeline;
pub use qualitykit::synth::generate_synthetic;
pub use report::{RunReport, REPORT_FORMAT, REPORT_VERSION};
pub use reproduce::{reproduce_paper, reproduce_with, Reproduction};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("stage '{stage}' failed: {message}")]
    Stage { stage: String, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{} reproduction check(s) failed: {}", .0.len(), .0.join(", "))]
    Acceptance(Vec<String>),
}

impl CliError {
    /// 1 stage or I/O failure, 2 configuration error, 3 failed reproduction.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Stage { .. } | CliError::Io { .. } => 1,
            CliError::Acceptance(_) => 3,
        }
    }

    pub(crate) fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}

/// Toolkit version recorded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
