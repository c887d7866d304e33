//! Least-squares solving and the t/F tail probabilities used for effect and
//! ANOVA inference.

mod dist;
mod lstsq;

pub use dist::{f_p_upper, ln_gamma, regularized_incomplete_beta, t_p_two_sided};
pub use lstsq::{solve_least_squares, DesignMatrix, LeastSquaresSolution, RANK_TOLERANCE};

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum NumericsError {
    #[error("design matrix is rank deficient: column '{0}' depends on earlier columns")]
    RankDeficient(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("domain error: {0}")]
    Domain(String),
}
