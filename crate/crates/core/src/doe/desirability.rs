use serde::{Deserialize, Serialize};

use super::{DoeError, SurfaceFit};

/// Grid points per coded axis in the coarse search.
pub const GRID_POINTS: usize = 41;
const MAX_GRID: usize = 5_000_000;

/// Maximize ramp: 0 below `lo`, 1 above `hi`, `((ŷ − lo)/(hi − lo))^shape`
/// in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesirabilitySpec {
    pub lo: f64,
    pub hi: f64,
    pub shape: f64,
}

impl DesirabilitySpec {
    /// Ramp from the smallest to the largest observed response, shape 1.
    pub fn from_responses(responses: &[f64]) -> Result<Self, DoeError> {
        let lo = responses.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = responses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let spec = DesirabilitySpec { lo, hi, shape: 1.0 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), DoeError> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(DoeError::Spec(format!(
                "need lo < hi, got {} and {}",
                self.lo, self.hi
            )));
        }
        if !(self.shape > 0.0 && self.shape.is_finite()) {
            return Err(DoeError::Spec(format!(
                "shape {} must be positive",
                self.shape
            )));
        }
        Ok(())
    }
}

pub fn desirability(spec: &DesirabilitySpec, y: f64) -> f64 {
    if y <= spec.lo {
        0.0
    } else if y >= spec.hi {
        1.0
    } else {
        ((y - spec.lo) / (spec.hi - spec.lo)).powf(spec.shape)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub coded: Vec<f64>,
    pub natural: Vec<f64>,
    pub prediction: f64,
    pub desirability: f64,
}

/// Higher desirability wins; equal desirability goes to the higher prediction.
fn better(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 > b.0 || (a.0 == b.0 && a.1 > b.1)
}

/// Maximizes desirability over the coded cube: a `GRID_POINTS`-per-axis grid,
/// then compass search from the best grid point with halving steps.
pub fn desirability_optimize(
    fit: &SurfaceFit,
    spec: &DesirabilitySpec,
) -> Result<Optimum, DoeError> {
    spec.validate()?;
    let k = fit.design.factors().len();
    let n_grid = (0..k).try_fold(1usize, |acc, _| acc.checked_mul(GRID_POINTS));
    if !matches!(n_grid, Some(n) if n <= MAX_GRID) {
        return Err(DoeError::Spec(format!(
            "grid search over {k} factors is too large"
        )));
    }
    let score = |c: &[f64]| {
        let y = fit.predict_coded(c);
        (desirability(spec, y), y)
    };
    let level = |i: usize| -1.0 + 2.0 * i as f64 / (GRID_POINTS - 1) as f64;

    let mut idx = vec![0usize; k];
    let mut point = vec![-1.0; k];
    let mut best = point.clone();
    let mut best_score = score(&point);
    'grid: loop {
        let s = score(&point);
        if better(s, best_score) {
            best_score = s;
            best.clone_from(&point);
        }
        for d in (0..k).rev() {
            idx[d] += 1;
            if idx[d] < GRID_POINTS {
                point[d] = level(idx[d]);
                continue 'grid;
            }
            idx[d] = 0;
            point[d] = -1.0;
        }
        break;
    }

    let mut step = 2.0 / (GRID_POINTS - 1) as f64;
    while step > 1e-10 {
        let mut moved = false;
        for d in 0..k {
            for dir in [1.0, -1.0] {
                let mut trial = best.clone();
                trial[d] = (trial[d] + dir * step).clamp(-1.0, 1.0);
                let s = score(&trial);
                if better(s, best_score) {
                    best_score = s;
                    best = trial;
                    moved = true;
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
    }

    let natural = fit
        .design
        .factors()
        .iter()
        .zip(&best)
        .map(|(f, &c)| f.from_coded(c))
        .collect();
    Ok(Optimum {
        coded: best,
        natural,
        prediction: best_score.1,
        desirability: best_score.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doe::testutil::{table5, table7_fit};
    use crate::doe::{build_ccf_design, fit_response_surface};

    #[test]
    fn ramp_endpoints() {
        let spec = DesirabilitySpec {
            lo: 0.8,
            hi: 0.9,
            shape: 1.0,
        };
        assert_eq!(desirability(&spec, 0.8), 0.0);
        assert_eq!(desirability(&spec, 0.9), 1.0);
        assert_eq!(desirability(&spec, 0.7), 0.0);
        assert!((desirability(&spec, 0.85) - 0.5).abs() < 1e-12);
        let sq = DesirabilitySpec { shape: 2.0, ..spec };
        assert!((desirability(&sq, 0.85) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn spec_checks() {
        let fit = table7_fit();
        for bad in [
            DesirabilitySpec {
                lo: 1.0,
                hi: 1.0,
                shape: 1.0,
            },
            DesirabilitySpec {
                lo: 0.0,
                hi: 1.0,
                shape: 0.0,
            },
        ] {
            assert!(matches!(
                desirability_optimize(&fit, &bad),
                Err(DoeError::Spec(_))
            ));
        }
    }

    #[test]
    fn published_fit_prefers_low_machine_productivity() {
        let fit = table7_fit();
        let spec = DesirabilitySpec::from_responses(&fit.responses).unwrap();
        assert_eq!((spec.lo, spec.hi), (0.816, 0.911));
        let opt = desirability_optimize(&fit, &spec).unwrap();
        assert_eq!(opt.coded[1], -1.0);
        assert!((opt.natural[1] - 0.45).abs() < 1e-12);
        assert_eq!(opt.desirability, 1.0);
        assert_eq!(opt, desirability_optimize(&fit, &spec).unwrap());
    }

    #[test]
    fn monotone_surface_optimum_on_face() {
        let d = build_ccf_design(&table5(), 3).unwrap();
        let y: Vec<f64> = d.runs().iter().map(|r| 1.0 - 0.3 * r.coded[2]).collect();
        let fit = fit_response_surface(&d, &y).unwrap();
        let spec = DesirabilitySpec {
            lo: 0.0,
            hi: 2.0,
            shape: 1.0,
        };
        let opt = desirability_optimize(&fit, &spec).unwrap();
        assert_eq!(opt.coded[2], -1.0);
        assert!((opt.prediction - 1.3).abs() < 1e-12);
    }

    #[test]
    fn interior_optimum_found_by_refinement() {
        let d = build_ccf_design(&table5(), 3).unwrap();
        // peak at coded x₀ = 0.3137 (off the 41-point grid)
        let y: Vec<f64> = d
            .runs()
            .iter()
            .map(|r| 1.0 - (r.coded[0] - 0.3137).powi(2) - 0.1 * r.coded[1] * r.coded[1])
            .collect();
        let fit = fit_response_surface(&d, &y).unwrap();
        let spec = DesirabilitySpec {
            lo: 0.0,
            hi: 2.0,
            shape: 1.0,
        };
        let opt = desirability_optimize(&fit, &spec).unwrap();
        assert!((opt.coded[0] - 0.3137).abs() < 1e-6);
        assert!(opt.coded[1].abs() < 1e-6);
    }
}
