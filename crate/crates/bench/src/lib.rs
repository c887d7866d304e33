//! Shared inputs for the benchmarks.

use qualitykit::data::Dataset;
use qualitykit::doe::{build_ccf_design, ExperimentDesign, Factor};
use qualitykit::numerics::DesignMatrix;
use qualitykit::synth::generate_synthetic;

/// The synthetic screening task at the given width.
pub fn screening_data(n_rows: usize, n_noise: usize) -> Dataset {
    generate_synthetic(n_rows, n_noise, 0.01, 1).expect("valid synthetic spec")
}

/// A well-conditioned `rows × cols` matrix with an intercept column.
pub fn dense_matrix(rows: usize, cols: usize) -> (DesignMatrix, Vec<f64>) {
    let mut columns = vec![("(intercept)".to_string(), vec![1.0; rows])];
    for c in 1..cols {
        let v = (0..rows)
            .map(|r| ((r * (c + 3) + c * c) % 97) as f64 / 97.0)
            .collect();
        columns.push((format!("x{c}"), v));
    }
    let y = (0..rows).map(|r| (r % 13) as f64 * 0.1).collect();
    (
        DesignMatrix::from_columns(columns).expect("equal lengths"),
        y,
    )
}

pub fn textile_design() -> ExperimentDesign {
    let factors = [
        Factor::new("Pigment fastness", 0.75, 0.875, 1.0),
        Factor::new("Machine productivity", 0.45, 0.69, 0.93),
        Factor::new("Pile weight", 1500.0, 2114.5, 2729.0),
    ]
    .map(|f| f.expect("ordered levels"));
    build_ccf_design(&factors, 3).expect("three factors")
}

pub const TEXTILE_RESPONSES: [f64; 17] = [
    0.89, 0.823, 0.911, 0.833, 0.864, 0.894, 0.816, 0.905, 0.84, 0.864, 0.8552, 0.872, 0.9, 0.83,
    0.861, 0.87, 0.864,
];
