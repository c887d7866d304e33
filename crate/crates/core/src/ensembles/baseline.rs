use serde::{Deserialize, Serialize};

use super::{EnsembleError, FeatureMatrix, Regressor, TrainingSet};
use crate::data::Dataset;
use crate::numerics::{solve_least_squares, DesignMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BaselineKind {
    Knn { k: usize },
    Ols,
}

/// k-nearest neighbours under per-column min-max scaled Euclidean distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub variables: Vec<String>,
    pub k: usize,
    mins: Vec<f64>,
    /// 0 for constant columns, which then never contribute to distance.
    inv_ranges: Vec<f64>,
    scaled_rows: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl KnnModel {
    fn fit(x: &FeatureMatrix, y: &[f64], k: usize) -> Result<Self, EnsembleError> {
        if k == 0 {
            return Err(EnsembleError::Config("knn needs k >= 1".into()));
        }
        let (mut mins, mut inv_ranges) = (Vec::new(), Vec::new());
        for f in 0..x.n_features() {
            let col = x.column(f);
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            mins.push(lo);
            inv_ranges.push(if hi > lo { 1.0 / (hi - lo) } else { 0.0 });
        }
        let mut model = KnnModel {
            variables: x.names().to_vec(),
            k: k.min(y.len()),
            mins,
            inv_ranges,
            scaled_rows: Vec::new(),
            targets: y.to_vec(),
        };
        model.scaled_rows = (0..x.n_rows()).map(|r| model.scale(&x.row(r))).collect();
        Ok(model)
    }

    fn scale(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mins.iter().zip(&self.inv_ranges))
            .map(|(v, (lo, inv))| (v - lo) * inv)
            .collect()
    }
}

impl Regressor for KnnModel {
    fn variables(&self) -> &[String] {
        &self.variables
    }

    fn predict_slice(&self, row: &[f64]) -> f64 {
        let q = self.scale(row);
        let mut dist: Vec<(f64, usize)> = self
            .scaled_rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        // nearest first, ties by training row order
        dist.select_nth_unstable_by(self.k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        dist[..self.k]
            .iter()
            .map(|&(_, i)| self.targets[i])
            .sum::<f64>()
            / self.k as f64
    }
}

/// Ordinary least squares with an intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsModel {
    pub variables: Vec<String>,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
}

impl OlsModel {
    fn fit(x: &FeatureMatrix, y: &[f64]) -> Result<Self, EnsembleError> {
        if x.n_rows() <= x.n_features() {
            return Err(EnsembleError::Fit(format!(
                "ols needs more rows ({}) than inputs ({})",
                x.n_rows(),
                x.n_features()
            )));
        }
        let mut cols = vec![("(intercept)".to_string(), vec![1.0; x.n_rows()])];
        cols.extend(
            x.names()
                .iter()
                .enumerate()
                .map(|(f, n)| (n.clone(), x.column(f).to_vec())),
        );
        let sol = solve_least_squares(&DesignMatrix::from_columns(cols)?, y)?;
        Ok(OlsModel {
            variables: x.names().to_vec(),
            intercept: sol.coefficients[0],
            coefficients: sol.coefficients[1..].to_vec(),
        })
    }
}

impl Regressor for OlsModel {
    fn variables(&self) -> &[String] {
        &self.variables
    }

    fn predict_slice(&self, row: &[f64]) -> f64 {
        self.intercept
            + row
                .iter()
                .zip(&self.coefficients)
                .map(|(x, b)| x * b)
                .sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BaselineModel {
    Knn(KnnModel),
    Ols(OlsModel),
}

impl Regressor for BaselineModel {
    fn variables(&self) -> &[String] {
        match self {
            BaselineModel::Knn(m) => m.variables(),
            BaselineModel::Ols(m) => m.variables(),
        }
    }

    fn predict_slice(&self, row: &[f64]) -> f64 {
        match self {
            BaselineModel::Knn(m) => m.predict_slice(row),
            BaselineModel::Ols(m) => m.predict_slice(row),
        }
    }
}

pub fn fit_baseline(train: &Dataset, kind: BaselineKind) -> Result<BaselineModel, EnsembleError> {
    let ts = TrainingSet::from_dataset(train)?;
    Ok(match kind {
        BaselineKind::Knn { k } => BaselineModel::Knn(KnnModel::fit(&ts.features, &ts.target, k)?),
        BaselineKind::Ols => BaselineModel::Ols(OlsModel::fit(&ts.features, &ts.target)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::testutil::dataset;
    use crate::numerics::NumericsError;

    #[test]
    fn knn_one_reproduces_training_rows() {
        let d = dataset(
            &[
                ("a", vec![0.0, 1.0, 2.0, 3.0]),
                ("b", vec![5.0, 1.0, 4.0, 2.0]),
            ],
            vec![0.1, 0.2, 0.3, 0.4],
        );
        let m = fit_baseline(&d, BaselineKind::Knn { k: 1 }).unwrap();
        let pred = m.predict_dataset(&d).unwrap();
        assert_eq!(pred, vec![0.1, 0.2, 0.3, 0.4]);
    }

    #[test]
    fn knn_averages_neighbours() {
        let d = dataset(&[("a", vec![0.0, 1.0, 10.0])], vec![1.0, 3.0, 100.0]);
        let m = fit_baseline(&d, BaselineKind::Knn { k: 2 }).unwrap();
        assert_eq!(m.predict_slice(&[0.4]), 2.0);
        assert!(fit_baseline(&d, BaselineKind::Knn { k: 0 }).is_err());
    }

    #[test]
    fn ols_collinear_is_rank_error() {
        let a = vec![1.0, 2.0, 3.0, 5.0, 8.0];
        let d = dataset(
            &[("a", a.clone()), ("a copy", a)],
            vec![1.0, 0.0, 1.0, 0.0, 2.0],
        );
        match fit_baseline(&d, BaselineKind::Ols) {
            Err(EnsembleError::Numerics(NumericsError::RankDeficient(c))) => {
                assert_eq!(c, "a copy")
            }
            other => panic!("expected rank error, got {other:?}"),
        }
    }

    #[test]
    fn ols_exact_line() {
        let a = vec![0.0, 1.0, 2.0, 3.0];
        let y = a.iter().map(|v| 4.0 - 2.0 * v).collect();
        let d = dataset(&[("a", a)], y);
        let BaselineModel::Ols(m) = fit_baseline(&d, BaselineKind::Ols).unwrap() else {
            unreachable!()
        };
        assert!((m.intercept - 4.0).abs() < 1e-12);
        assert!((m.coefficients[0] + 2.0).abs() < 1e-12);
    }
}
