use serde::{Deserialize, Serialize};

use super::{BoostedModel, ForestModel, RegressionTree, Regressor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceEntry {
    pub variable: String,
    pub score: f64,
}

/// Variables by descending importance, scaled so the top score is 100.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRanking {
    /// Label of the model that produced the ranking.
    pub source: String,
    pub entries: Vec<ImportanceEntry>,
}

impl ImportanceRanking {
    /// Builds a ranking from an already ordered list (e.g. a published one);
    /// scores descend linearly from 100.
    pub fn from_order<S: AsRef<str>>(source: impl Into<String>, order: &[S]) -> Self {
        let n = order.len().max(1) as f64;
        ImportanceRanking {
            source: source.into(),
            entries: order
                .iter()
                .enumerate()
                .map(|(i, v)| ImportanceEntry {
                    variable: v.as_ref().to_string(),
                    score: 100.0 * (n - i as f64) / n,
                })
                .collect(),
        }
    }

    pub fn top(&self, k: usize) -> Vec<&str> {
        self.entries
            .iter()
            .take(k)
            .map(|e| e.variable.as_str())
            .collect()
    }

    pub fn truncated(&self, k: usize) -> ImportanceRanking {
        ImportanceRanking {
            source: self.source.clone(),
            entries: self.entries.iter().take(k).cloned().collect(),
        }
    }

    pub fn score(&self, variable: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.variable == variable)
            .map(|e| e.score)
    }
}

/// Total split gain per input variable, aligned with `Regressor::variables`.
pub trait SplitGains: Regressor {
    fn split_gains(&self) -> Vec<f64>;
}

fn sum_gains<'a>(n: usize, trees: impl Iterator<Item = &'a RegressionTree>) -> Vec<f64> {
    let mut totals = vec![0.0; n];
    for t in trees {
        t.add_split_gains(&mut totals);
    }
    totals
}

impl SplitGains for RegressionTree {
    fn split_gains(&self) -> Vec<f64> {
        sum_gains(self.variables().len(), std::iter::once(self))
    }
}

impl SplitGains for ForestModel {
    fn split_gains(&self) -> Vec<f64> {
        sum_gains(self.variables.len(), self.trees.iter())
    }
}

impl SplitGains for BoostedModel {
    /// Gains are pre-shrinkage and in subsample-weighted squared-error units.
    fn split_gains(&self) -> Vec<f64> {
        sum_gains(self.variables.len(), self.stages.iter().map(|s| &s.tree))
    }
}

/// Split-gain importance normalized to a maximum of 100; ties are ordered by
/// variable name. A model with no splits scores every variable 0.
pub fn variable_importance<M: SplitGains + ?Sized>(model: &M, source: &str) -> ImportanceRanking {
    let gains = model.split_gains();
    let max = gains.iter().copied().fold(0.0, f64::max);
    let mut entries: Vec<ImportanceEntry> = model
        .variables()
        .iter()
        .zip(&gains)
        .map(|(v, &g)| ImportanceEntry {
            variable: v.clone(),
            score: if max > 0.0 { 100.0 * g / max } else { 0.0 },
        })
        .collect();
    entries.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.variable.cmp(&b.variable))
    });
    ImportanceRanking {
        source: source.to_string(),
        entries,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Column, Dataset, Role};
    use crate::ensembles::{
        fit_boosted_trees, fit_random_forest, stream_rng, BoostConfig, ForestConfig,
    };
    use rand::Rng;

    fn planted(seed: u64, signal: bool) -> Dataset {
        let mut rng = stream_rng(seed, 7);
        let n = 300;
        let mut cols: Vec<Column> = (1..=5)
            .map(|i| {
                Column::new(
                    format!("x{i}"),
                    Role::Input,
                    (0..n).map(|_| rng.random::<f64>()).collect(),
                )
            })
            .collect();
        let y = if signal {
            cols[0].values.clone()
        } else {
            (0..n).map(|_| rng.random::<f64>()).collect()
        };
        cols.push(Column::new("y", Role::Response, y));
        Dataset::new("planted", cols).unwrap()
    }

    #[test]
    fn planted_signal_ranks_first() {
        let d = planted(1, true);
        let forest = fit_random_forest(
            &d,
            &ForestConfig {
                n_trees: 50,
                ..ForestConfig::default()
            },
        )
        .unwrap();
        let boost = fit_boosted_trees(
            &d,
            &BoostConfig {
                n_stages: 100,
                ..BoostConfig::default()
            },
        )
        .unwrap();
        for r in [
            variable_importance(&forest, "rf"),
            variable_importance(&boost, "bt"),
        ] {
            assert_eq!(r.entries[0].variable, "x1");
            assert_eq!(r.entries[0].score, 100.0);
            assert_eq!(r.entries.len(), 5);
            assert!(r.entries.windows(2).all(|w| w[0].score >= w[1].score));
        }
    }

    #[test]
    fn pure_noise_is_roughly_uniform() {
        let mut ratios: Vec<f64> = (0..20)
            .map(|seed| {
                let d = planted(100 + seed, false);
                let cfg = ForestConfig {
                    n_trees: 50,
                    seed,
                    ..ForestConfig::default()
                };
                let r = variable_importance(&fit_random_forest(&d, &cfg).unwrap(), "rf");
                let mean = r.entries.iter().map(|e| e.score).sum::<f64>() / r.entries.len() as f64;
                r.entries[0].score / mean
            })
            .collect();
        ratios.sort_by(f64::total_cmp);
        let median = 0.5 * (ratios[9] + ratios[10]);
        assert!(median < 3.0, "median max/mean {median}");
    }

    #[test]
    fn ties_sort_by_name() {
        let vars: Vec<String> = ["b", "a", "c"].iter().map(|s| s.to_string()).collect();
        let tree = RegressionTree::leaf(vars, 1.0, 3);
        let r = variable_importance(&tree, "t");
        assert_eq!(r.top(3), vec!["a", "b", "c"]);
        assert!(r.entries.iter().all(|e| e.score == 0.0));
    }

    #[test]
    fn from_order_keeps_order() {
        let r = ImportanceRanking::from_order("listed", &["p", "q", "r", "s"]);
        assert_eq!(r.top(4), vec!["p", "q", "r", "s"]);
        assert_eq!(r.score("p"), Some(100.0));
    }
}
