use serde::{Deserialize, Serialize};

use super::tree::{grow_tree, RegressionTree, TreeConfig};
use super::{stream_rng, EnsembleError, Regressor, SortedIndex, TrainingSet};
use crate::data::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoostConfig {
    pub n_stages: usize,
    /// Leaves per stage tree; `Some(2)` is a single-split stump.
    pub max_leaf_nodes: Option<usize>,
    pub min_rows_per_leaf: usize,
    pub learn_rate: f64,
    /// Fraction of rows drawn without replacement for each stage.
    pub subsample: f64,
    pub seed: u64,
}

impl Default for BoostConfig {
    fn default() -> Self {
        BoostConfig {
            n_stages: 500,
            max_leaf_nodes: Some(2),
            min_rows_per_leaf: 1,
            learn_rate: 0.1,
            subsample: 0.5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostStage {
    pub tree: RegressionTree,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub variables: Vec<String>,
    /// Mean training response.
    pub initial_value: f64,
    pub stages: Vec<BoostStage>,
    pub learn_rate: f64,
    /// Training MSE after 0, 1, …, n_stages stages.
    pub train_mse: Vec<f64>,
    pub config: BoostConfig,
}

impl Regressor for BoostedModel {
    fn variables(&self) -> &[String] {
        &self.variables
    }

    fn predict_slice(&self, row: &[f64]) -> f64 {
        self.stages.iter().fold(self.initial_value, |acc, s| {
            acc + s.scale * s.tree.predict_row(row)
        })
    }
}

/// Stochastic gradient boosting for squared error: each stage fits a small
/// tree to the current residuals on a fresh subsample and is added with
/// shrinkage `learn_rate`.
pub fn fit_boosted_trees(
    train: &Dataset,
    config: &BoostConfig,
) -> Result<BoostedModel, EnsembleError> {
    let ts = TrainingSet::from_dataset(train)?;
    fit_boost_on(&ts, config)
}

pub(crate) fn fit_boost_on(
    ts: &TrainingSet,
    config: &BoostConfig,
) -> Result<BoostedModel, EnsembleError> {
    if !(config.learn_rate > 0.0 && config.learn_rate <= 1.0) {
        return Err(EnsembleError::Config(format!(
            "learn_rate {} not in (0, 1]",
            config.learn_rate
        )));
    }
    if !(config.subsample > 0.0 && config.subsample <= 1.0) {
        return Err(EnsembleError::Config(format!(
            "subsample {} not in (0, 1]",
            config.subsample
        )));
    }
    let tree_cfg = TreeConfig {
        max_leaf_nodes: config.max_leaf_nodes,
        min_rows_per_leaf: config.min_rows_per_leaf,
        mtry: None,
        k_best_splits: None,
    };
    tree_cfg.validate(ts.features.n_features())?;

    let n = ts.n_rows();
    let initial_value = ts.target.iter().sum::<f64>() / n as f64;
    let mut current = vec![initial_value; n];
    let mse = |pred: &[f64]| {
        pred.iter()
            .zip(&ts.target)
            .map(|(p, y)| (y - p) * (y - p))
            .sum::<f64>()
            / n as f64
    };
    let mut train_mse = vec![mse(&current)];
    let sorted = SortedIndex::new(&ts.features);
    let n_sub = ((config.subsample * n as f64).round() as usize).clamp(1, n);
    let mut stages = Vec::with_capacity(config.n_stages);

    for k in 0..config.n_stages {
        let mut rng = stream_rng(config.seed, k);
        let weights = if n_sub == n {
            vec![1.0; n]
        } else {
            let mut w = vec![0.0; n];
            for r in rand::seq::index::sample(&mut rng, n, n_sub) {
                w[r] = 1.0;
            }
            w
        };
        let residuals: Vec<f64> = ts.target.iter().zip(&current).map(|(y, f)| y - f).collect();
        let tree = grow_tree(
            &ts.features,
            &sorted,
            &residuals,
            &weights,
            &tree_cfg,
            &mut rng,
        )?;
        for (r, f) in current.iter_mut().enumerate() {
            *f += config.learn_rate * tree.predict_row(&ts.features.row(r));
        }
        train_mse.push(mse(&current));
        stages.push(BoostStage {
            tree,
            scale: config.learn_rate,
        });
    }

    Ok(BoostedModel {
        variables: ts.features.names().to_vec(),
        initial_value,
        stages,
        learn_rate: config.learn_rate,
        train_mse,
        config: config.clone(),
    })
}
