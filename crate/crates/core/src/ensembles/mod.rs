//! Regression trees, random forests, stochastic gradient boosting, KNN/OLS
//! baselines and split-gain variable importance.

mod baseline;
mod boost;
mod forest;
mod importance;
mod persist;
mod tree;

pub use baseline::{fit_baseline, BaselineKind, BaselineModel, KnnModel, OlsModel};
pub use boost::{fit_boosted_trees, BoostConfig, BoostStage, BoostedModel};
pub use forest::{fit_random_forest, ForestConfig, ForestModel, Sampling};
pub use importance::{variable_importance, ImportanceEntry, ImportanceRanking, SplitGains};
pub use persist::{load_model, save_model, SavedModel, MODEL_FORMAT, MODEL_FORMAT_VERSION};
pub use tree::{Node, RegressionTree, TreeConfig};

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::data::{DataError, Dataset};
use crate::numerics::NumericsError;

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("fit error: {0}")]
    Fit(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("prediction error: row has no value for variable '{0}'")]
    MissingVariable(String),
    #[error("model file error: {0}")]
    Format(String),
}

/// Column-major dense inputs with their names.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    n_rows: usize,
}

impl FeatureMatrix {
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self, EnsembleError> {
        let n_rows = columns.first().map_or(0, Vec::len);
        if names.len() != columns.len() || columns.iter().any(|c| c.len() != n_rows) {
            return Err(EnsembleError::Fit("ragged feature matrix".into()));
        }
        Ok(FeatureMatrix {
            names,
            columns,
            n_rows,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn column(&self, f: usize) -> &[f64] {
        &self.columns[f]
    }

    pub fn row(&self, r: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[r]).collect()
    }

    /// Dense copy of `names` taken from the dataset.
    pub fn from_dataset(d: &Dataset, names: &[String]) -> Result<Self, EnsembleError> {
        let columns = names
            .iter()
            .map(|n| d.dense_column(n).map(<[f64]>::to_vec))
            .collect::<Result<Vec<_>, _>>()?;
        let mut m = FeatureMatrix::new(names.to_vec(), columns)?;
        m.n_rows = d.n_rows();
        Ok(m)
    }
}

/// Inputs plus response of a fully observed dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub features: FeatureMatrix,
    pub target: Vec<f64>,
    pub response_name: String,
}

impl TrainingSet {
    pub fn from_dataset(d: &Dataset) -> Result<Self, EnsembleError> {
        let (name, target) = d.dense_response()?;
        if d.n_rows() == 0 {
            return Err(EnsembleError::Fit("empty dataset".into()));
        }
        let inputs = d.input_names();
        if inputs.is_empty() {
            return Err(EnsembleError::Fit("dataset has no input columns".into()));
        }
        Ok(TrainingSet {
            features: FeatureMatrix::from_dataset(d, &inputs)?,
            target: target.to_vec(),
            response_name: name.to_string(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.target.len()
    }
}

/// Row indices sorted ascending by each feature (ties by row index).
#[derive(Debug, Clone)]
pub struct SortedIndex {
    orders: Vec<Vec<u32>>,
}

impl SortedIndex {
    pub fn new(x: &FeatureMatrix) -> Self {
        let orders = (0..x.n_features())
            .map(|f| {
                let col = x.column(f);
                let mut o: Vec<u32> = (0..x.n_rows() as u32).collect();
                o.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]));
                o
            })
            .collect();
        SortedIndex { orders }
    }

    pub fn orders(&self) -> &[Vec<u32>] {
        &self.orders
    }
}

/// Per-tree (or per-stage) random stream keyed on `(seed, index)`; the
/// stream does not depend on which thread builds the tree or when.
pub(crate) fn stream_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// A trained model that predicts the response from named inputs.
pub trait Regressor {
    /// Input variables in the order `predict_slice` expects.
    fn variables(&self) -> &[String];

    fn predict_slice(&self, row: &[f64]) -> f64;

    fn predict(&self, row: &HashMap<String, f64>) -> Result<f64, EnsembleError> {
        let values = self
            .variables()
            .iter()
            .map(|v| {
                row.get(v)
                    .copied()
                    .ok_or_else(|| EnsembleError::MissingVariable(v.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.predict_slice(&values))
    }

    fn predict_dataset(&self, d: &Dataset) -> Result<Vec<f64>, EnsembleError> {
        let cols = self
            .variables()
            .iter()
            .map(|v| match d.column(v) {
                None => Err(EnsembleError::MissingVariable(v.clone())),
                Some(_) => d.dense_column(v).map_err(EnsembleError::from),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut row = vec![0.0; cols.len()];
        Ok((0..d.n_rows())
            .map(|r| {
                for (slot, c) in row.iter_mut().zip(&cols) {
                    *slot = c[r];
                }
                self.predict_slice(&row)
            })
            .collect())
    }
}

/// Single tree on the dataset's inputs. `row_weights` default to 1.
pub fn fit_regression_tree(
    train: &Dataset,
    config: &TreeConfig,
    row_weights: Option<&[f64]>,
    seed: u64,
) -> Result<RegressionTree, EnsembleError> {
    let ts = TrainingSet::from_dataset(train)?;
    let weights = match row_weights {
        Some(w) if w.len() != ts.n_rows() => {
            return Err(EnsembleError::Fit(format!(
                "{} weights for {} rows",
                w.len(),
                ts.n_rows()
            )))
        }
        Some(w) => w.to_vec(),
        None => vec![1.0; ts.n_rows()],
    };
    let sorted = SortedIndex::new(&ts.features);
    tree::grow_tree(
        &ts.features,
        &sorted,
        &ts.target,
        &weights,
        config,
        &mut stream_rng(seed, 0),
    )
}

#[cfg(test)]
pub(crate) mod testutil {
    use crate::data::{Column, Dataset, Role};

    pub fn dataset(inputs: &[(&str, Vec<f64>)], y: Vec<f64>) -> Dataset {
        let mut cols: Vec<Column> = inputs
            .iter()
            .map(|(n, v)| Column::new(*n, Role::Input, v.clone()))
            .collect();
        cols.push(Column::new("y", Role::Response, y));
        Dataset::new("test", cols).unwrap()
    }

    /// Ten rows at x = 0 with y = 0 and ten at x = 1 with y = 1.
    pub fn separable() -> Dataset {
        let x: Vec<f64> = (0..20).map(|i| if i < 10 { 0.0 } else { 1.0 }).collect();
        dataset(&[("x", x.clone())], x)
    }
}
