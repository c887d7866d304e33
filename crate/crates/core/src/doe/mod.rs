//! Blocked face-centered central composite designs, quadratic response
//! surfaces with effects and ANOVA tables, and desirability optimization.

mod design;
mod desirability;
mod io;
mod mlr;
mod surface;

pub use design::{build_ccf_design, DesignRun, ExperimentDesign, Factor};
pub use desirability::{
    desirability, desirability_optimize, DesirabilitySpec, Optimum, GRID_POINTS,
};
pub use io::{read_design, write_design, DesignTable};
pub use mlr::{
    predict_mlr, MlrLevels, MLR_INTERCEPT, MLR_MACHINE_PRODUCTIVITY, MLR_PIGMENT_FASTNESS,
    MLR_PILE_WEIGHT,
};
pub use surface::{
    fit_response_surface, predict_surface, render_anova, render_effects, AnovaRow, EffectRow,
    SurfaceFit, SurfacePrediction, Term,
};

use thiserror::Error;

use crate::numerics::NumericsError;

#[derive(Debug, Error)]
pub enum DoeError {
    #[error("invalid factor '{name}': {reason}")]
    Factor { name: String, reason: String },
    #[error("design error: {0}")]
    Design(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("desirability spec error: {0}")]
    Spec(String),
    #[error("design file line {line}: {message}")]
    Format { line: u64, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
