//! Synthetic process data with a known ground truth: the three design
//! factors drive the response through the published linear equation, and
//! any number of pure-noise inputs ride along.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{Column, DataError, Dataset, Role};
use crate::doe::{predict_mlr, MlrLevels};
use crate::ensembles::stream_rng;

pub const PIGMENT_FASTNESS: &str = "Pigment fastness";
pub const MACHINE_PRODUCTIVITY: &str = "Machine productivity";
pub const PILE_WEIGHT: &str = "Pile weight";
pub const QUALITY_SCORE: &str = "Textile quality score";

/// The three inputs that carry signal.
pub const SIGNAL_VARIABLES: [&str; 3] = [PIGMENT_FASTNESS, MACHINE_PRODUCTIVITY, PILE_WEIGHT];

pub fn noise_name(i: usize) -> String {
    format!("Noise {:02}", i + 1)
}

/// Draws pigment fastness ~ U[0.75, 1], machine productivity ~ U[0.45, 0.93],
/// pile weight ~ U[1500, 2729], computes the equation plus N(0, noise_sd)
/// error, and appends `n_noise_vars` independent U[0, 1] columns.
pub fn generate_synthetic(
    n_rows: usize,
    n_noise_vars: usize,
    noise_sd: f64,
    seed: u64,
) -> Result<Dataset, DataError> {
    if n_rows < 10 {
        return Err(DataError::Spec(format!(
            "need at least 10 rows, asked for {n_rows}"
        )));
    }
    if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
        return Err(DataError::Spec(format!("noise sd {noise_sd} must be >= 0")));
    }
    let mut rng = stream_rng(seed, 0);
    let pf: Vec<f64> = (0..n_rows).map(|_| rng.random_range(0.75..=1.0)).collect();
    let mp: Vec<f64> = (0..n_rows).map(|_| rng.random_range(0.45..=0.93)).collect();
    let pw: Vec<f64> = (0..n_rows)
        .map(|_| rng.random_range(1500.0..=2729.0))
        .collect();
    let normal = Normal::new(0.0, noise_sd).map_err(|e| DataError::Spec(e.to_string()))?;
    let y: Vec<f64> = (0..n_rows)
        .map(|i| {
            let clean = predict_mlr(MlrLevels {
                pigment_fastness: pf[i],
                machine_productivity: mp[i],
                pile_weight: pw[i],
            });
            if noise_sd > 0.0 {
                clean + normal.sample(&mut rng)
            } else {
                clean
            }
        })
        .collect();

    let mut columns = vec![
        Column::new(PIGMENT_FASTNESS, Role::Input, pf),
        Column::new(MACHINE_PRODUCTIVITY, Role::Input, mp),
        Column::new(PILE_WEIGHT, Role::Input, pw),
    ];
    for j in 0..n_noise_vars {
        let mut noise_rng = stream_rng(seed, j + 1);
        columns.push(Column::new(
            noise_name(j),
            Role::Input,
            (0..n_rows).map(|_| noise_rng.random::<f64>()).collect(),
        ));
    }
    columns.push(Column::new(QUALITY_SCORE, Role::Response, y));
    Dataset::new("synthetic", columns)
}
