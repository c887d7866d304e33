//! Quality analytics: tree-ensemble predictor screening and variable-importance
//! voting over process data, followed by blocked face-centered central
//! composite experiments with quadratic response-surface fitting, effects and
//! ANOVA tables, and desirability optimization.

pub mod data;
pub mod doe;
pub mod ensembles;
pub mod metrics;
pub mod numerics;
pub mod screening;
pub mod synth;

pub use data::{Column, DataError, Dataset, ImputeStrategy, QualityScoreSpec, Role, Schema};
pub use doe::{DoeError, ExperimentDesign, Factor, SurfaceFit};
pub use ensembles::{
    BoostConfig, EnsembleError, ForestConfig, ImportanceRanking, Regressor, SavedModel, TreeConfig,
};
pub use metrics::{MetricReport, RiskReport, Split};
pub use numerics::NumericsError;
pub use screening::{OverrideRule, ScreeningError, VotedSelection};
