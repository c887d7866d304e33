//! Regression error metrics and split-level risk estimates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("predicted has {predicted} values, actual has {actual}")]
    LengthMismatch { predicted: usize, actual: usize },
    #[error("need at least {needed} paired values, have {found}")]
    TooFew { needed: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub mse: f64,
    pub rmse: f64,
    pub mae: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// Mean squared error of a split with the standard error of that mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub split: Split,
    pub risk_estimate: f64,
    pub standard_error: f64,
    pub n: usize,
}

fn paired(predicted: &[f64], actual: &[f64], needed: usize) -> Result<(), MetricError> {
    if predicted.len() != actual.len() {
        return Err(MetricError::LengthMismatch {
            predicted: predicted.len(),
            actual: actual.len(),
        });
    }
    if predicted.len() < needed {
        return Err(MetricError::TooFew {
            needed,
            found: predicted.len(),
        });
    }
    Ok(())
}

pub fn regression_metrics(predicted: &[f64], actual: &[f64]) -> Result<MetricReport, MetricError> {
    paired(predicted, actual, 1)?;
    let n = predicted.len();
    let (sq, abs) = predicted
        .iter()
        .zip(actual)
        .fold((0.0, 0.0), |(sq, abs), (p, a)| {
            let e = p - a;
            (sq + e * e, abs + e.abs())
        });
    let mse = sq / n as f64;
    Ok(MetricReport {
        mse,
        rmse: mse.sqrt(),
        mae: abs / n as f64,
        n,
    })
}

pub fn risk_report(
    predicted: &[f64],
    actual: &[f64],
    split: Split,
) -> Result<RiskReport, MetricError> {
    paired(predicted, actual, 2)?;
    let n = predicted.len();
    let sq: Vec<f64> = predicted
        .iter()
        .zip(actual)
        .map(|(p, a)| (p - a) * (p - a))
        .collect();
    // Same accumulation order as regression_metrics so the two agree exactly.
    let risk = sq.iter().sum::<f64>() / n as f64;
    let var = sq.iter().map(|s| (s - risk) * (s - risk)).sum::<f64>() / (n - 1) as f64;
    Ok(RiskReport {
        split,
        risk_estimate: risk,
        standard_error: (var / n as f64).sqrt(),
        n,
    })
}
