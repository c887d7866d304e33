use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow_tree, RegressionTree, TreeConfig};
use super::{stream_rng, EnsembleError, Regressor, SortedIndex, TrainingSet};
use crate::data::Dataset;

/// How each tree's training rows are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Sampling {
    /// `n` draws with replacement.
    Bootstrap,
    /// `round(fraction × n)` rows without replacement.
    Subsample { fraction: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `tree.mtry = None` resolves to `ceil(n_inputs / 3)`.
    pub tree: TreeConfig,
    pub sampling: Sampling,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            tree: TreeConfig {
                max_leaf_nodes: None,
                min_rows_per_leaf: 5,
                mtry: None,
                k_best_splits: None,
            },
            sampling: Sampling::Bootstrap,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn resolved_mtry(&self, n_inputs: usize) -> usize {
        self.tree
            .mtry
            .unwrap_or_else(|| n_inputs.div_ceil(3).max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub variables: Vec<String>,
    pub trees: Vec<RegressionTree>,
    /// Rows never drawn for each tree.
    pub oob_indices: Vec<Vec<usize>>,
    pub config: ForestConfig,
}

impl ForestModel {
    /// Out-of-bag prediction per training row; `None` for rows that were in
    /// every tree's sample.
    pub fn oob_predictions(&self, train: &TrainingSet) -> Vec<Option<f64>> {
        let n = train.n_rows();
        let mut sum = vec![0.0; n];
        let mut count = vec![0usize; n];
        for (tree, oob) in self.trees.iter().zip(&self.oob_indices) {
            for &r in oob {
                sum[r] += tree.predict_row(&train.features.row(r));
                count[r] += 1;
            }
        }
        sum.iter()
            .zip(&count)
            .map(|(&s, &c)| (c > 0).then(|| s / c as f64))
            .collect()
    }
}

impl Regressor for ForestModel {
    fn variables(&self) -> &[String] {
        &self.variables
    }

    fn predict_slice(&self, row: &[f64]) -> f64 {
        let total: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
        total / self.trees.len() as f64
    }
}

/// Bagged trees with `mtry` candidate inputs per split. Tree `k` draws all its
/// randomness from the stream keyed on `(seed, k)`, so the result is the same
/// for any thread count.
pub fn fit_random_forest(
    train: &Dataset,
    config: &ForestConfig,
) -> Result<ForestModel, EnsembleError> {
    let ts = TrainingSet::from_dataset(train)?;
    fit_forest_on(&ts, config)
}

pub(crate) fn fit_forest_on(
    ts: &TrainingSet,
    config: &ForestConfig,
) -> Result<ForestModel, EnsembleError> {
    if config.n_trees == 0 {
        return Err(EnsembleError::Config("n_trees must be at least 1".into()));
    }
    if let Sampling::Subsample { fraction } = config.sampling {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(EnsembleError::Config(format!(
                "subsample fraction {fraction} not in (0, 1]"
            )));
        }
    }
    let n = ts.n_rows();
    let p = ts.features.n_features();
    let mut tree_cfg = config.tree.clone();
    tree_cfg.mtry = Some(config.resolved_mtry(p));
    tree_cfg.validate(p)?;
    let sorted = SortedIndex::new(&ts.features);

    let fitted: Vec<(RegressionTree, Vec<usize>)> = (0..config.n_trees)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(config.seed, k);
            let mut weights = vec![0.0; n];
            match config.sampling {
                Sampling::Bootstrap => {
                    for _ in 0..n {
                        weights[rng.random_range(0..n)] += 1.0;
                    }
                }
                Sampling::Subsample { fraction } => {
                    let m = ((fraction * n as f64).round() as usize).clamp(1, n);
                    for r in rand::seq::index::sample(&mut rng, n, m) {
                        weights[r] = 1.0;
                    }
                }
            }
            let oob = (0..n).filter(|&r| weights[r] == 0.0).collect();
            let tree = grow_tree(
                &ts.features,
                &sorted,
                &ts.target,
                &weights,
                &tree_cfg,
                &mut rng,
            )?;
            Ok((tree, oob))
        })
        .collect::<Result<_, EnsembleError>>()?;

    let (trees, oob_indices) = fitted.into_iter().unzip();
    Ok(ForestModel {
        variables: ts.features.names().to_vec(),
        trees,
        oob_indices,
        config: config.clone(),
    })
}
