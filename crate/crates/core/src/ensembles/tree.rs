use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EnsembleError, FeatureMatrix, Regressor, SortedIndex};

/// Growth limits for one regression tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeConfig {
    /// `None` grows until no split is admissible.
    pub max_leaf_nodes: Option<usize>,
    pub min_rows_per_leaf: usize,
    /// Candidate variables drawn per split; `None` means all.
    pub mtry: Option<usize>,
    /// Pick uniformly among the K best splits instead of the best one.
    pub k_best_splits: Option<usize>,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_leaf_nodes: None,
            min_rows_per_leaf: 1,
            mtry: None,
            k_best_splits: None,
        }
    }
}

impl TreeConfig {
    pub fn validate(&self, n_features: usize) -> Result<(), EnsembleError> {
        if matches!(self.max_leaf_nodes, Some(m) if m < 2) {
            return Err(EnsembleError::Config(
                "max_leaf_nodes must be at least 2".into(),
            ));
        }
        if self.min_rows_per_leaf == 0 {
            return Err(EnsembleError::Config(
                "min_rows_per_leaf must be at least 1".into(),
            ));
        }
        if let Some(m) = self.mtry {
            if m == 0 || m > n_features {
                return Err(EnsembleError::Config(format!(
                    "mtry {m} outside 1..={n_features}"
                )));
            }
        }
        if self.k_best_splits == Some(0) {
            return Err(EnsembleError::Config(
                "k_best_splits must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
    Leaf {
        value: f64,
        n: usize,
    },
    /// Rows with `value < threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        /// Weighted reduction in squared error achieved by this split.
        gain: f64,
        n: usize,
        left: usize,
        right: usize,
    },
}

/// Binary regression tree stored as an arena; `nodes[0]` is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    variables: Vec<String>,
    nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn leaf(variables: Vec<String>, value: f64, n: usize) -> Self {
        RegressionTree {
            variables,
            nodes: vec![Node::Leaf { value, n }],
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Accumulates each split's gain onto its variable.
    pub fn add_split_gains(&self, totals: &mut [f64]) {
        for node in &self.nodes {
            if let Node::Split { feature, gain, .. } = *node {
                totals[feature] += gain;
            }
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value, .. } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    i = if row[feature] < threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }
}

impl Regressor for RegressionTree {
    fn variables(&self) -> &[String] {
        &self.variables
    }

    fn predict_slice(&self, row: &[f64]) -> f64 {
        self.predict_row(row)
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// A splittable leaf; its rows occupy `start..end` of every feature order.
struct Pending {
    node: usize,
    start: usize,
    end: usize,
    best: Candidate,
}

struct Grower<'a> {
    x: &'a FeatureMatrix,
    target: &'a [f64],
    weights: &'a [f64],
    config: &'a TreeConfig,
    /// Features in name order, for the deterministic tie-break.
    name_rank: Vec<usize>,
}

impl Grower<'_> {
    fn node_stats(&self, rows: &[u32]) -> (f64, f64) {
        let (mut w, mut s) = (0.0, 0.0);
        for &r in rows {
            let wi = self.weights[r as usize];
            w += wi;
            s += wi * self.target[r as usize];
        }
        (w, s / w)
    }

    /// True when `a` beats `b` under (gain desc, name asc, threshold asc).
    fn better(&self, a: &Candidate, b: &Candidate) -> bool {
        if a.gain != b.gain {
            return a.gain > b.gain;
        }
        let (ra, rb) = (self.name_rank[a.feature], self.name_rank[b.feature]);
        if ra != rb {
            return ra < rb;
        }
        a.threshold < b.threshold
    }

    fn best_split(
        &self,
        orders: &[Vec<u32>],
        (start, end): (usize, usize),
        rng: &mut ChaCha8Rng,
    ) -> Option<Candidate> {
        let any = &orders[0][start..end];
        let n = any.len();
        let min_leaf = self.config.min_rows_per_leaf;
        if n < 2 * min_leaf {
            return None;
        }
        let (total_w, mean) = self.node_stats(any);
        let (mut lo, mut hi, mut sse) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for &r in any {
            let t = self.target[r as usize];
            lo = lo.min(t);
            hi = hi.max(t);
            sse += self.weights[r as usize] * (t - mean) * (t - mean);
        }
        if lo == hi || sse <= 0.0 {
            return None;
        }
        let floor = 1e-14 * sse;

        let n_features = self.x.n_features();
        let features: Vec<usize> = match self.config.mtry {
            Some(m) if m < n_features => {
                let mut f = index::sample(rng, n_features, m).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..n_features).collect(),
        };
        let k_best = self.config.k_best_splits.unwrap_or(1).max(1);
        let mut top: Vec<Candidate> = Vec::with_capacity(k_best + 1);

        for &f in &features {
            let col = self.x.column(f);
            let order = &orders[f][start..end];
            let (mut wl, mut sl) = (0.0, 0.0);
            for i in 0..n - 1 {
                let r = order[i] as usize;
                let wi = self.weights[r];
                wl += wi;
                sl += wi * (self.target[r] - mean);
                let nl = i + 1;
                if nl < min_leaf || n - nl < min_leaf {
                    continue;
                }
                let (v, next) = (col[r], col[order[i + 1] as usize]);
                if v >= next {
                    continue;
                }
                let wr = total_w - wl;
                if wl <= 0.0 || wr <= 0.0 {
                    continue;
                }
                // Centered sums: the parent term S²/W vanishes and SR = −SL.
                let gain = sl * sl / wl + sl * sl / wr;
                if gain <= floor {
                    continue;
                }
                let mut threshold = 0.5 * (v + next);
                if threshold <= v {
                    threshold = next;
                }
                let cand = Candidate {
                    feature: f,
                    threshold,
                    gain,
                };
                let pos = top
                    .iter()
                    .position(|c| self.better(&cand, c))
                    .unwrap_or(top.len());
                if pos < k_best {
                    top.insert(pos, cand);
                    top.truncate(k_best);
                }
            }
        }
        match top.len() {
            0 => None,
            1 => Some(top[0]),
            len => Some(top[rng.random_range(0..len)]),
        }
    }
}

/// Greedy best-first growth on weighted rows.
///
/// Rows with zero weight are excluded. The leaf with the largest attainable
/// gain is split next until the leaf budget is spent or no leaf can be split.
pub(crate) fn grow_tree(
    x: &FeatureMatrix,
    sorted: &SortedIndex,
    target: &[f64],
    weights: &[f64],
    config: &TreeConfig,
    rng: &mut ChaCha8Rng,
) -> Result<RegressionTree, EnsembleError> {
    config.validate(x.n_features())?;
    // Each feature's order is kept partitioned so every leaf owns a
    // contiguous range of it.
    let mut orders: Vec<Vec<u32>> = sorted
        .orders()
        .iter()
        .map(|o| {
            o.iter()
                .copied()
                .filter(|&r| weights[r as usize] > 0.0)
                .collect()
        })
        .collect();
    let n_root = orders.first().map_or(0, Vec::len);
    if n_root == 0 {
        return Err(EnsembleError::Fit("no training rows".into()));
    }

    let mut name_rank = vec![0; x.n_features()];
    let mut by_name: Vec<usize> = (0..x.n_features()).collect();
    by_name.sort_by(|&a, &b| x.names()[a].cmp(&x.names()[b]));
    for (rank, f) in by_name.into_iter().enumerate() {
        name_rank[f] = rank;
    }
    let grower = Grower {
        x,
        target,
        weights,
        config,
        name_rank,
    };

    let leaf_of = |rows: &[u32]| {
        let (_, mean) = grower.node_stats(rows);
        Node::Leaf {
            value: mean,
            n: rows.len(),
        }
    };

    let mut nodes = vec![leaf_of(&orders[0])];
    let mut frontier = Vec::new();
    if let Some(best) = grower.best_split(&orders, (0, n_root), rng) {
        frontier.push(Pending {
            node: 0,
            start: 0,
            end: n_root,
            best,
        });
    }
    let max_leaves = config.max_leaf_nodes.unwrap_or(usize::MAX);
    let mut n_leaves = 1;
    let mut goes_left = vec![false; x.n_rows()];
    let mut scratch: Vec<u32> = Vec::with_capacity(n_root);

    while n_leaves < max_leaves {
        // Largest gain first; ties go to the earliest created leaf.
        let pick = frontier.iter().enumerate().max_by(|(_, a), (_, b)| {
            a.best
                .gain
                .total_cmp(&b.best.gain)
                .then(b.node.cmp(&a.node))
        });
        let Some((i, _)) = pick else { break };
        let Pending {
            node,
            start,
            end,
            best: split,
        } = frontier.swap_remove(i);

        let col = x.column(split.feature);
        for &r in &orders[0][start..end] {
            goes_left[r as usize] = col[r as usize] < split.threshold;
        }
        // stable in-place partition of every feature's range
        let mut mid = start;
        for order in orders.iter_mut() {
            scratch.clear();
            let mut w = start;
            for j in start..end {
                let r = order[j];
                if goes_left[r as usize] {
                    order[w] = r;
                    w += 1;
                } else {
                    scratch.push(r);
                }
            }
            order[w..end].copy_from_slice(&scratch);
            mid = w;
        }

        let (left, right) = (nodes.len(), nodes.len() + 1);
        nodes.push(leaf_of(&orders[0][start..mid]));
        nodes.push(leaf_of(&orders[0][mid..end]));
        nodes[node] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            gain: split.gain,
            n: end - start,
            left,
            right,
        };
        n_leaves += 1;

        for (node, start, end) in [(left, start, mid), (right, mid, end)] {
            if let Some(best) = grower.best_split(&orders, (start, end), rng) {
                frontier.push(Pending {
                    node,
                    start,
                    end,
                    best,
                });
            }
        }
    }

    Ok(RegressionTree {
        variables: x.names().to_vec(),
        nodes,
    })
}
