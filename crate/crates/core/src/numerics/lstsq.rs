use serde::{Deserialize, Serialize};

use super::NumericsError;

/// Dense row-major model matrix with one label per column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    labels: Vec<String>,
}

impl DesignMatrix {
    pub fn new(rows: usize, labels: Vec<String>, data: Vec<f64>) -> Result<Self, NumericsError> {
        let cols = labels.len();
        if data.len() != rows * cols {
            return Err(NumericsError::Shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(NumericsError::Shape(format!("duplicate label '{l}'")));
            }
        }
        Ok(DesignMatrix {
            rows,
            cols,
            data,
            labels,
        })
    }

    /// Builds from labelled columns of equal length.
    pub fn from_columns(columns: Vec<(String, Vec<f64>)>) -> Result<Self, NumericsError> {
        let rows = columns.first().map_or(0, |(_, c)| c.len());
        if let Some((l, c)) = columns.iter().find(|(_, c)| c.len() != rows) {
            return Err(NumericsError::Shape(format!(
                "column '{l}' has {} rows, expected {rows}",
                c.len()
            )));
        }
        let cols = columns.len();
        let mut data = vec![0.0; rows * cols];
        for (j, (_, c)) in columns.iter().enumerate() {
            for (i, &v) in c.iter().enumerate() {
                data[i * cols + j] = v;
            }
        }
        DesignMatrix::new(rows, columns.into_iter().map(|(l, _)| l).collect(), data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, col)).collect()
    }

    /// Copy without the listed columns.
    pub fn drop_columns(&self, drop: &[usize]) -> DesignMatrix {
        let keep: Vec<usize> = (0..self.cols).filter(|j| !drop.contains(j)).collect();
        let mut data = Vec::with_capacity(self.rows * keep.len());
        for i in 0..self.rows {
            data.extend(keep.iter().map(|&j| self.get(i, j)));
        }
        DesignMatrix {
            rows: self.rows,
            cols: keep.len(),
            data,
            labels: keep.iter().map(|&j| self.labels[j].clone()).collect(),
        }
    }

    pub fn mul_vec(&self, b: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(b)
                    .map(|(x, c)| x * c)
                    .sum()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeastSquaresSolution {
    pub labels: Vec<String>,
    pub coefficients: Vec<f64>,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    pub residual_df: usize,
    pub rss: f64,
    /// Residual mean square; `NaN` when `residual_df` is zero.
    pub sigma2: f64,
    /// Diagonal of `(XᵀX)⁻¹`.
    pub covariance_scale: Vec<f64>,
}

impl LeastSquaresSolution {
    pub fn coefficient(&self, label: &str) -> Option<f64> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|j| self.coefficients[j])
    }

    /// Standard errors `sqrt(sigma2 * covariance_scale)`.
    pub fn standard_errors(&self) -> Vec<f64> {
        self.covariance_scale
            .iter()
            .map(|c| (self.sigma2 * c).sqrt())
            .collect()
    }
}

/// Relative size below which a triangular pivot marks a dependent column.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Least squares by Householder QR (no normal equations).
///
/// A column is rank deficient when its pivot `|R_jj|` falls below
/// [`RANK_TOLERANCE`] times that column's own Euclidean norm, so rescaling a
/// column never changes the rank decision.
pub fn solve_least_squares(
    x: &DesignMatrix,
    y: &[f64],
) -> Result<LeastSquaresSolution, NumericsError> {
    let (m, n) = (x.rows, x.cols);
    if y.len() != m {
        return Err(NumericsError::Shape(format!(
            "{} responses for {m} rows",
            y.len()
        )));
    }
    if m < n {
        return Err(NumericsError::Shape(format!(
            "{m} rows cannot determine {n} coefficients"
        )));
    }
    if n == 0 {
        return Err(NumericsError::Shape("no columns".into()));
    }

    // Column-major working copy: a[j][i].
    let mut a: Vec<Vec<f64>> = (0..n).map(|j| x.column(j)).collect();
    let norms: Vec<f64> = a.iter().map(|c| norm(c)).collect();
    let mut qty = y.to_vec();
    let mut diag = vec![0.0; n];

    for k in 0..n {
        let alpha_norm = norm(&a[k][k..]);
        if alpha_norm <= RANK_TOLERANCE * norms[k] || norms[k] == 0.0 {
            return Err(NumericsError::RankDeficient(x.labels[k].clone()));
        }
        let alpha = if a[k][k] > 0.0 {
            -alpha_norm
        } else {
            alpha_norm
        };
        // v = a_k[k..] - alpha e_1, stored in place
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        diag[k] = alpha;
        a[k][k] = alpha;
        for t in a[k][k + 1..].iter_mut() {
            *t = 0.0;
        }
        if vnorm2 == 0.0 {
            continue;
        }
        for col in a.iter_mut().skip(k + 1) {
            reflect(&v, vnorm2, &mut col[k..]);
        }
        reflect(&v, vnorm2, &mut qty[k..]);
    }

    // Back substitution R b = Qᵀy.
    let r = |i: usize, j: usize| a[j][i];
    let mut coef = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| r(i, j) * coef[j]).sum();
        coef[i] = (qty[i] - s) / diag[i];
    }

    // R⁻¹ by columns; diag((XᵀX)⁻¹) = squared row norms of R⁻¹.
    let mut rinv = vec![vec![0.0; n]; n];
    for j in 0..n {
        rinv[j][j] = 1.0 / diag[j];
        for i in (0..j).rev() {
            let s: f64 = (i + 1..=j).map(|l| r(i, l) * rinv[l][j]).sum();
            rinv[i][j] = -s / diag[i];
        }
    }
    let covariance_scale: Vec<f64> = rinv
        .iter()
        .map(|row| row.iter().map(|v| v * v).sum())
        .collect();

    let fitted = x.mul_vec(&coef);
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let residual_df = m - n;
    let sigma2 = if residual_df > 0 {
        rss / residual_df as f64
    } else {
        f64::NAN
    };

    Ok(LeastSquaresSolution {
        labels: x.labels.clone(),
        coefficients: coef,
        fitted,
        residuals,
        residual_df,
        rss,
        sigma2,
        covariance_scale,
    })
}

fn norm(v: &[f64]) -> f64 {
    // scaled to avoid overflow on large natural-unit columns
    let scale = v.iter().fold(0.0f64, |s, x| s.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale
        * v.iter()
            .map(|x| (x / scale) * (x / scale))
            .sum::<f64>()
            .sqrt()
}

fn reflect(v: &[f64], vnorm2: f64, target: &mut [f64]) {
    let dot: f64 = v.iter().zip(target.iter()).map(|(a, b)| a * b).sum();
    let f = 2.0 * dot / vnorm2;
    for (t, vi) in target.iter_mut().zip(v) {
        *t -= f * vi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matrix(cols: &[(&str, Vec<f64>)]) -> DesignMatrix {
        DesignMatrix::from_columns(
            cols.iter()
                .map(|(l, c)| (l.to_string(), c.clone()))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn intercept_only() {
        let x = matrix(&[("one", vec![1.0; 3])]);
        let s = solve_least_squares(&x, &[3.0, 3.0, 3.0]).unwrap();
        assert!((s.coefficients[0] - 3.0).abs() < 1e-15);
        assert!(s.residuals.iter().all(|r| r.abs() < 1e-15));
        assert_eq!(s.residual_df, 2);
    }

    #[test]
    fn exact_linear_fit() {
        let xs: Vec<f64> = (0..8).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 - 0.75 * x).collect();
        let x = matrix(&[("one", vec![1.0; 8]), ("x", xs)]);
        let s = solve_least_squares(&x, &ys).unwrap();
        assert!((s.coefficients[0] - 2.5).abs() < 1e-12);
        assert!((s.coefficients[1] + 0.75).abs() < 1e-12);
        assert!(s.residuals.iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn duplicated_column_is_rank_deficient() {
        let c = vec![1.0, 2.0, 4.0, 8.0];
        let x = matrix(&[("one", vec![1.0; 4]), ("a", c.clone()), ("b", c)]);
        let err = solve_least_squares(&x, &[1.0, 2.0, 3.0, 4.0]).unwrap_err();
        assert_eq!(err, NumericsError::RankDeficient("b".into()));
    }

    #[test]
    fn scaled_duplicate_is_rank_deficient() {
        let c = vec![1.0, 2.0, 4.0, 8.0];
        let big: Vec<f64> = c.iter().map(|v| v * 2000.0).collect();
        let x = matrix(&[("a", c), ("b", big)]);
        assert!(solve_least_squares(&x, &[1.0, 2.0, 3.0, 4.0]).is_err());
    }

    #[test]
    fn covariance_against_explicit_inverse() {
        // 2x2 XᵀX inverted by hand.
        let xs = [0.0, 1.0, 2.0, 5.0];
        let x = matrix(&[("one", vec![1.0; 4]), ("x", xs.to_vec())]);
        let s = solve_least_squares(&x, &[1.0, 0.0, 2.0, 4.0]).unwrap();
        let (n, sx, sxx) = (4.0, 8.0, 30.0);
        let det = n * sxx - sx * sx;
        assert!((s.covariance_scale[0] - sxx / det).abs() < 1e-14);
        assert!((s.covariance_scale[1] - n / det).abs() < 1e-14);
    }

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    proptest! {
        #[test]
        fn residuals_orthogonal_and_scale_invariant(
            rows in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -2.0f64..2.0), 6..30),
            scale in 0.01f64..5000.0,
        ) {
            let a: Vec<f64> = rows.iter().map(|r| r.0).collect();
            let b: Vec<f64> = rows.iter().map(|r| r.1).collect();
            let y: Vec<f64> = rows.iter().map(|r| r.2).collect();
            let n = rows.len();
            let x = matrix(&[("one", vec![1.0; n]), ("a", a.clone()), ("b", b.clone())]);
            let s = match solve_least_squares(&x, &y) {
                Ok(s) => s,
                Err(_) => return Ok(()),
            };
            let rn = norm(&s.residuals);
            for j in 0..3 {
                let c = x.column(j);
                prop_assert!(dot(&c, &s.residuals).abs() <= 1e-9 * norm(&c) * rn.max(1e-300) + 1e-14);
            }
            let bs: Vec<f64> = b.iter().map(|v| v * scale).collect();
            let xs = matrix(&[("one", vec![1.0; n]), ("a", a), ("b", bs)]);
            let ss = solve_least_squares(&xs, &y).unwrap();
            for j in 0..2 {
                prop_assert!((ss.coefficients[j] - s.coefficients[j]).abs()
                    <= 1e-9 * s.coefficients[j].abs().max(1e-6));
            }
            prop_assert!((ss.coefficients[2] * scale - s.coefficients[2]).abs()
                <= 1e-9 * s.coefficients[2].abs().max(1e-6));
        }
    }
}
