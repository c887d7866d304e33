//! Tabular data model: CSV ingestion, missing-value imputation, quality-score
//! composition and train/test splitting.
//!
//! A [`Dataset`] is an ordered set of named continuous columns, each carrying a
//! [`Role`] and a missing-value mask. Masked entries hold `NaN` and are never
//! read by downstream computations: anything that needs dense data goes through
//! [`Dataset::dense_column`], which refuses masked columns.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}: expected {expected} fields, found {found}")]
    Parse {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("line {line}, column '{column}': cannot parse '{value}' as a number")]
    Cell {
        line: u64,
        column: String,
        value: String,
    },
    #[error("duplicate column name '{0}'")]
    DuplicateColumn(String),
    #[error("column '{0}' not found")]
    UnknownColumn(String),
    #[error("column '{name}' has {found} entries, dataset has {expected} rows")]
    Length {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("dataset has more than one response column")]
    MultipleResponses,
    #[error("dataset has no response column")]
    NoResponse,
    #[error("column '{0}' contains missing entries")]
    Missing(String),
    #[error("imputation error: column '{0}' has no observed values")]
    Imputation(String),
    #[error("lookup error: no reference value for column '{0}'")]
    Lookup(String),
    #[error("quality score spec error: {0}")]
    Spec(String),
    #[error("range error: column '{column}' row {row} value {value} outside [0, 1]")]
    Range {
        column: String,
        row: usize,
        value: f64,
    },
    #[error("split error: {0}")]
    Split(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Input,
    Response,
    Ignored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub role: Role,
    pub values: Vec<f64>,
    pub missing: Vec<bool>,
}

impl Column {
    /// Fully observed column.
    pub fn new(name: impl Into<String>, role: Role, values: Vec<f64>) -> Self {
        let missing = vec![false; values.len()];
        Column {
            name: name.into(),
            role,
            values,
            missing,
        }
    }

    /// Column from optional values; `None` entries become masked.
    pub fn from_options(name: impl Into<String>, role: Role, values: &[Option<f64>]) -> Self {
        Column {
            name: name.into(),
            role,
            values: values.iter().map(|v| v.unwrap_or(f64::NAN)).collect(),
            missing: values.iter().map(Option::is_none).collect(),
        }
    }

    pub fn missing_count(&self) -> usize {
        self.missing.iter().filter(|&&m| m).count()
    }

    /// Observed (unmasked) values in row order.
    pub fn observed(&self) -> impl Iterator<Item = f64> + '_ {
        self.values
            .iter()
            .zip(&self.missing)
            .filter(|(_, &m)| !m)
            .map(|(&v, _)| v)
    }

    pub fn get(&self, row: usize) -> Option<f64> {
        if self.missing[row] {
            None
        } else {
            Some(self.values[row])
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    columns: Vec<Column>,
    n_rows: usize,
}

impl Dataset {
    /// Validates the column invariants: equal lengths, unique names, at most
    /// one response.
    pub fn new(name: impl Into<String>, columns: Vec<Column>) -> Result<Self, DataError> {
        let n_rows = columns.first().map_or(0, |c| c.values.len());
        let mut seen = HashSet::new();
        let mut responses = 0;
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(DataError::DuplicateColumn(c.name.clone()));
            }
            for len in [c.values.len(), c.missing.len()] {
                if len != n_rows {
                    return Err(DataError::Length {
                        name: c.name.clone(),
                        expected: n_rows,
                        found: len,
                    });
                }
            }
            if c.role == Role::Response {
                responses += 1;
            }
        }
        if responses > 1 {
            return Err(DataError::MultipleResponses);
        }
        Ok(Dataset {
            name: name.into(),
            columns,
            n_rows,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn input_names(&self) -> Vec<String> {
        self.columns
            .iter()
            .filter(|c| c.role == Role::Input)
            .map(|c| c.name.clone())
            .collect()
    }

    pub fn response(&self) -> Option<&Column> {
        self.columns.iter().find(|c| c.role == Role::Response)
    }

    pub fn masked_count(&self) -> usize {
        self.columns.iter().map(Column::missing_count).sum()
    }

    /// Values of a column that must be fully observed.
    pub fn dense_column(&self, name: &str) -> Result<&[f64], DataError> {
        let col = self
            .column(name)
            .ok_or_else(|| DataError::UnknownColumn(name.to_string()))?;
        if col.missing.iter().any(|&m| m) {
            return Err(DataError::Missing(name.to_string()));
        }
        Ok(&col.values)
    }

    pub fn dense_response(&self) -> Result<(&str, &[f64]), DataError> {
        let col = self.response().ok_or(DataError::NoResponse)?;
        Ok((&col.name, self.dense_column(&col.name)?))
    }

    /// Copy with the given roles replaced.
    pub fn with_roles(&self, roles: &HashMap<String, Role>) -> Result<Dataset, DataError> {
        for name in roles.keys() {
            if self.column(name).is_none() {
                return Err(DataError::UnknownColumn(name.clone()));
            }
        }
        let columns = self
            .columns
            .iter()
            .map(|c| {
                let mut c = c.clone();
                if let Some(&r) = roles.get(&c.name) {
                    c.role = r;
                }
                c
            })
            .collect();
        Dataset::new(self.name.clone(), columns)
    }

    /// Rows in the given order (indices may repeat).
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let columns = self
            .columns
            .iter()
            .map(|c| Column {
                name: c.name.clone(),
                role: c.role,
                values: rows.iter().map(|&r| c.values[r]).collect(),
                missing: rows.iter().map(|&r| c.missing[r]).collect(),
            })
            .collect();
        Dataset {
            name: self.name.clone(),
            columns,
            n_rows: rows.len(),
        }
    }

    /// Observed values of one row keyed by column name.
    pub fn row_map(&self, row: usize) -> HashMap<String, f64> {
        self.columns
            .iter()
            .filter_map(|c| c.get(row).map(|v| (c.name.clone(), v)))
            .collect()
    }

    fn push_column(&mut self, column: Column) -> Result<(), DataError> {
        if self.column(&column.name).is_some() {
            return Err(DataError::DuplicateColumn(column.name));
        }
        if column.role == Role::Response && self.response().is_some() {
            return Err(DataError::MultipleResponses);
        }
        self.columns.push(column);
        Ok(())
    }
}

/// Role assignment for the header of a delimited file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    #[serde(default)]
    pub roles: BTreeMap<String, Role>,
    /// Role for header names absent from `roles`. When `None`, every header
    /// must be listed.
    #[serde(default)]
    pub default_role: Option<Role>,
    /// Extra token treated as missing, besides the empty field.
    #[serde(default)]
    pub missing_token: Option<String>,
}

impl Schema {
    pub fn with_default(role: Role) -> Self {
        Schema {
            default_role: Some(role),
            ..Schema::default()
        }
    }

    pub fn role(mut self, name: impl Into<String>, role: Role) -> Self {
        self.roles.insert(name.into(), role);
        self
    }

    pub fn missing_token(mut self, token: impl Into<String>) -> Self {
        self.missing_token = Some(token.into());
        self
    }
}

/// Parses comma-separated text with a mandatory header row. Lines starting
/// with `#` are comments.
pub fn load_table<R: Read>(source: R, schema: &Schema) -> Result<Dataset, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();

    for name in schema.roles.keys() {
        if !headers.contains(name) {
            return Err(DataError::Schema(format!(
                "column '{name}' is not in the header"
            )));
        }
    }
    let mut columns = Vec::with_capacity(headers.len());
    for name in &headers {
        let role = match (schema.roles.get(name), schema.default_role) {
            (Some(&r), _) => r,
            (None, Some(r)) => r,
            (None, None) => return Err(DataError::Schema(format!("no role for column '{name}'"))),
        };
        columns.push(Column {
            name: name.clone(),
            role,
            values: Vec::new(),
            missing: Vec::new(),
        });
    }

    let mut record = csv::StringRecord::new();
    while reader.read_record(&mut record)? {
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != headers.len() {
            return Err(DataError::Parse {
                line,
                expected: headers.len(),
                found: record.len(),
            });
        }
        for (col, field) in columns.iter_mut().zip(record.iter()) {
            let is_missing = field.is_empty() || schema.missing_token.as_deref() == Some(field);
            if is_missing {
                col.values.push(f64::NAN);
                col.missing.push(true);
            } else {
                let v: f64 = field.parse().map_err(|_| DataError::Cell {
                    line,
                    column: col.name.clone(),
                    value: field.to_string(),
                })?;
                col.values.push(v);
                col.missing.push(false);
            }
        }
    }
    Dataset::new("table", columns)
}

/// Writes the dataset as CSV. Masked cells are written as the empty field, or
/// as `missing_token` when given. Values use the shortest representation that
/// parses back to the same `f64`.
pub fn write_table<W: Write>(
    d: &Dataset,
    sink: W,
    missing_token: Option<&str>,
) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(d.columns.iter().map(|c| c.name.as_str()))?;
    for row in 0..d.n_rows {
        w.write_record(d.columns.iter().map(|c| {
            if c.missing[row] {
                missing_token.unwrap_or("").to_string()
            } else {
                c.values[row].to_string()
            }
        }))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImputeStrategy {
    ColumnMean,
    ColumnMedian,
    ReferenceLookup,
}

/// Fills every masked entry. Statistics are computed over observed entries
/// only; observed values are untouched.
pub fn impute_missing(
    d: &Dataset,
    strategy: ImputeStrategy,
    reference: Option<&BTreeMap<String, f64>>,
) -> Result<Dataset, DataError> {
    let mut out = d.clone();
    for col in &mut out.columns {
        if col.missing_count() == 0 {
            continue;
        }
        let fill = match strategy {
            ImputeStrategy::ColumnMean => {
                let (sum, n) = col
                    .observed()
                    .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
                if n == 0 {
                    return Err(DataError::Imputation(col.name.clone()));
                }
                sum / n as f64
            }
            ImputeStrategy::ColumnMedian => {
                let mut obs: Vec<f64> = col.observed().collect();
                if obs.is_empty() {
                    return Err(DataError::Imputation(col.name.clone()));
                }
                obs.sort_by(f64::total_cmp);
                let mid = obs.len() / 2;
                if obs.len() % 2 == 1 {
                    obs[mid]
                } else {
                    0.5 * (obs[mid - 1] + obs[mid])
                }
            }
            ImputeStrategy::ReferenceLookup => *reference
                .and_then(|r| r.get(&col.name))
                .ok_or_else(|| DataError::Lookup(col.name.clone()))?,
        };
        for (v, m) in col.values.iter_mut().zip(col.missing.iter_mut()) {
            if *m {
                *v = fill;
                *m = false;
            }
        }
    }
    Ok(out)
}

/// Weighted combination of [0, 1]-scaled component columns into one response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityScoreSpec {
    pub components: Vec<(String, f64)>,
    pub output_name: String,
}

impl QualityScoreSpec {
    /// Equal weights over the named components.
    pub fn equal_weights<S: AsRef<str>>(names: &[S], output_name: impl Into<String>) -> Self {
        let w = 1.0 / names.len().max(1) as f64;
        QualityScoreSpec {
            components: names.iter().map(|n| (n.as_ref().to_string(), w)).collect(),
            output_name: output_name.into(),
        }
    }

    /// Weights rescaled to sum to one.
    pub fn normalized_weights(&self) -> Result<Vec<f64>, DataError> {
        if self.components.is_empty() {
            return Err(DataError::Spec("weight list is empty".into()));
        }
        if let Some((name, w)) = self
            .components
            .iter()
            .find(|(_, w)| !w.is_finite() || *w < 0.0)
        {
            return Err(DataError::Spec(format!(
                "weight {w} for '{name}' is not a nonnegative number"
            )));
        }
        let total: f64 = self.components.iter().map(|(_, w)| w).sum();
        if total <= 0.0 {
            return Err(DataError::Spec("weights sum to zero".into()));
        }
        Ok(self.components.iter().map(|(_, w)| w / total).collect())
    }
}

/// Appends the weighted mean of the component columns as the response.
pub fn compose_quality_score(d: &Dataset, spec: &QualityScoreSpec) -> Result<Dataset, DataError> {
    let weights = spec.normalized_weights()?;
    let mut score = vec![0.0; d.n_rows];
    for ((name, _), w) in spec.components.iter().zip(&weights) {
        let col = d
            .column(name)
            .ok_or_else(|| DataError::UnknownColumn(name.clone()))?;
        if col.role != Role::Input {
            return Err(DataError::Spec(format!(
                "component '{name}' must have role input"
            )));
        }
        let values = d.dense_column(name)?;
        for (row, (&v, s)) in values.iter().zip(score.iter_mut()).enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(DataError::Range {
                    column: name.clone(),
                    row,
                    value: v,
                });
            }
            *s += w * v;
        }
    }
    let mut out = d.clone();
    out.push_column(Column::new(spec.output_name.clone(), Role::Response, score))?;
    Ok(out)
}

/// Row indices of a seeded train/test partition, each sorted ascending.
pub fn split_indices(
    n_rows: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), DataError> {
    if n_rows < 2 {
        return Err(DataError::Split(format!(
            "need at least 2 rows, have {n_rows}"
        )));
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DataError::Split(format!(
            "test fraction {test_fraction} not in (0, 1)"
        )));
    }
    let n_test = ((test_fraction * n_rows as f64).round() as usize).clamp(1, n_rows - 1);
    let mut order: Vec<usize> = (0..n_rows).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut test = order[..n_test].to_vec();
    let mut train = order[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

pub fn split_train_test(
    d: &Dataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), DataError> {
    let (train, test) = split_indices(d.n_rows, test_fraction, seed)?;
    Ok((d.select_rows(&train), d.select_rows(&test)))
}
