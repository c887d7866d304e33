//! Predictor screening on a wide dataset, rank voting across models, and
//! expert override rules applied to the voted selection.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Dataset, Role};
use crate::ensembles::{
    fit_random_forest, variable_importance, EnsembleError, ForestConfig, ImportanceRanking,
    TreeConfig,
};

#[derive(Debug, Error)]
pub enum ScreeningError {
    #[error(transparent)]
    Training(#[from] EnsembleError),
    #[error("screening error: {0}")]
    Screen(String),
    #[error("vote error: {0}")]
    Vote(String),
    #[error("override error in rule {index} (remove '{remove}', insert '{insert}'): {reason}")]
    Override {
        index: usize,
        remove: String,
        insert: String,
        reason: String,
    },
}

/// Forest used for screening unless configured otherwise: 200 trees.
pub fn default_screening_forest(seed: u64) -> ForestConfig {
    ForestConfig {
        n_trees: 200,
        tree: TreeConfig {
            min_rows_per_leaf: 5,
            ..TreeConfig::default()
        },
        seed,
        ..ForestConfig::default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Screening {
    /// Full ranking over every input.
    pub ranking: ImportanceRanking,
    /// Top-k of `ranking`.
    pub selected: ImportanceRanking,
    /// Input dataset with the unselected inputs marked ignored.
    pub dataset: Dataset,
}

pub fn screen_predictors(d: &Dataset, k: usize, seed: u64) -> Result<Screening, ScreeningError> {
    screen_predictors_with(d, k, &default_screening_forest(seed))
}

/// Ranks every input by forest split-gain importance and keeps the top `k`.
pub fn screen_predictors_with(
    d: &Dataset,
    k: usize,
    forest: &ForestConfig,
) -> Result<Screening, ScreeningError> {
    let n_inputs = d.input_names().len();
    if k == 0 || k > n_inputs {
        return Err(ScreeningError::Screen(format!(
            "k = {k} must be between 1 and the {n_inputs} inputs"
        )));
    }
    let model = fit_random_forest(d, forest)?;
    let ranking = variable_importance(&model, "screening forest");
    let selected = ranking.truncated(k);
    let keep: Vec<&str> = selected.top(k);
    let roles: HashMap<String, Role> = d
        .input_names()
        .into_iter()
        .filter(|n| !keep.contains(&n.as_str()))
        .map(|n| (n, Role::Ignored))
        .collect();
    let dataset = d.with_roles(&roles).map_err(EnsembleError::from)?;
    Ok(Screening {
        ranking,
        selected,
        dataset,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VotedVariable {
    pub name: String,
    /// Sources whose top-m listed the variable, sorted.
    pub models: Vec<String>,
    pub borda: usize,
}

impl VotedVariable {
    pub fn count(&self) -> usize {
        self.models.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VotedSelection {
    pub m: usize,
    pub entries: Vec<VotedVariable>,
}

impl VotedSelection {
    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.name.as_str()).collect()
    }
}

/// Borda vote over each model's top-`m` (first place earns `m` points, m-th
/// earns 1). Variables are ordered by how many models listed them, then by
/// Borda score, then by name, and the list is cut to `m`.
pub fn vote_rankings(
    rankings: &[ImportanceRanking],
    m: usize,
) -> Result<VotedSelection, ScreeningError> {
    if rankings.is_empty() {
        return Err(ScreeningError::Vote("no rankings to vote on".into()));
    }
    if m == 0 {
        return Err(ScreeningError::Vote("m must be at least 1".into()));
    }
    let mut tally: BTreeMap<&str, (Vec<String>, usize)> = BTreeMap::new();
    for r in rankings {
        if r.entries.len() < m {
            return Err(ScreeningError::Vote(format!(
                "ranking '{}' has {} entries, fewer than m = {m}",
                r.source,
                r.entries.len()
            )));
        }
        for (pos, name) in r.top(m).into_iter().enumerate() {
            let e = tally.entry(name).or_default();
            e.0.push(r.source.clone());
            e.1 += m - pos;
        }
    }
    let mut entries: Vec<VotedVariable> = tally
        .into_iter()
        .map(|(name, (mut models, borda))| {
            models.sort();
            VotedVariable {
                name: name.to_string(),
                models,
                borda,
            }
        })
        .collect();
    entries.sort_by(|a, b| {
        b.count()
            .cmp(&a.count())
            .then(b.borda.cmp(&a.borda))
            .then_with(|| a.name.cmp(&b.name))
    });
    entries.truncate(m);
    Ok(VotedSelection { m, entries })
}

/// Replace `remove` with `insert`, with a mandatory reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverrideRule {
    pub remove: String,
    pub insert: String,
    pub justification: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverrideOutcome {
    /// Voted list cut to the final count, before any rule.
    pub before: Vec<String>,
    pub selected: Vec<String>,
    pub applied: Vec<OverrideRule>,
}

/// Cuts the voted list to `final_count`, applies each rule in order (the
/// removed variable drops out, the inserted one is appended), then cuts to
/// `final_count` again.
pub fn apply_overrides(
    v: &VotedSelection,
    rules: &[OverrideRule],
    final_count: usize,
) -> Result<OverrideOutcome, ScreeningError> {
    let before: Vec<String> = v
        .entries
        .iter()
        .take(final_count)
        .map(|e| e.name.clone())
        .collect();
    let mut selected = before.clone();
    for (index, rule) in rules.iter().enumerate() {
        let fail = |reason: &str| ScreeningError::Override {
            index,
            remove: rule.remove.clone(),
            insert: rule.insert.clone(),
            reason: reason.to_string(),
        };
        if rule.justification.trim().is_empty() {
            return Err(fail("justification is empty"));
        }
        let Some(pos) = selected.iter().position(|n| *n == rule.remove) else {
            return Err(fail("variable to remove is not in the selection"));
        };
        if selected.contains(&rule.insert) {
            return Err(fail("variable to insert is already selected"));
        }
        selected.remove(pos);
        selected.push(rule.insert.clone());
    }
    selected.truncate(final_count);
    Ok(OverrideOutcome {
        before,
        selected,
        applied: rules.to_vec(),
    })
}
