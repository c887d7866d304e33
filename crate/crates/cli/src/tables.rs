//! Small CSV formats used by the pipeline, and the bundled case-study tables.

use std::collections::BTreeMap;
use std::io::Read;

use qualitykit::doe::Factor;
use qualitykit::ensembles::ImportanceRanking;
use serde::Deserialize;

/// Published rank lists (`model,rank,variable`).
pub const RANKINGS_CSV: &str = include_str!("../data/rankings.csv");
/// Factor levels (`factor,low,center,high`).
pub const LEVELS_CSV: &str = include_str!("../data/levels.csv");
/// Linear-equation estimates per design run (`standard_order,estimated,validated`).
pub const MLR_CSV: &str = include_str!("../data/equation_estimates.csv");
/// The 17-run design with its measured responses.
pub const DESIGN_CSV: &str = include_str!("../data/design.csv");
/// Pipeline configuration over the bundled tables.
pub const CASE_STUDY_CONFIG: &str = include_str!("../data/case_study.toml");

pub const RESPONSE: &str = "Textile quality score";

fn reader<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(source)
}

fn rows<T: for<'de> Deserialize<'de>, R: Read>(source: R, what: &str) -> Result<Vec<T>, String> {
    reader(source)
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| format!("{what}: {e}"))
}

#[derive(Deserialize)]
struct RankRow {
    model: String,
    rank: usize,
    variable: String,
}

/// One ranking per model, in order of first appearance.
pub fn read_rankings<R: Read>(source: R) -> Result<Vec<ImportanceRanking>, String> {
    let mut models: Vec<(String, Vec<(usize, String)>)> = Vec::new();
    for r in rows::<RankRow, _>(source, "rankings")? {
        match models.iter_mut().find(|(m, _)| *m == r.model) {
            Some((_, list)) => list.push((r.rank, r.variable)),
            None => models.push((r.model, vec![(r.rank, r.variable)])),
        }
    }
    if models.is_empty() {
        return Err("rankings: no rows".into());
    }
    models
        .into_iter()
        .map(|(model, mut list)| {
            list.sort_by_key(|(rank, _)| *rank);
            if list.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(format!("rankings: model '{model}' repeats a rank"));
            }
            let order: Vec<String> = list.into_iter().map(|(_, v)| v).collect();
            Ok(ImportanceRanking::from_order(model, &order))
        })
        .collect()
}

#[derive(Deserialize)]
struct LevelRow {
    factor: String,
    low: f64,
    center: f64,
    high: f64,
}

pub fn read_levels<R: Read>(source: R) -> Result<Vec<Factor>, String> {
    rows::<LevelRow, _>(source, "levels")?
        .into_iter()
        .map(|r| Factor::new(r.factor, r.low, r.center, r.high).map_err(|e| e.to_string()))
        .collect()
}

#[derive(Deserialize)]
struct ReferenceRow {
    variable: String,
    value: f64,
}

/// `variable,value` reference table for lookup imputation.
pub fn read_reference<R: Read>(source: R) -> Result<BTreeMap<String, f64>, String> {
    Ok(rows::<ReferenceRow, _>(source, "reference")?
        .into_iter()
        .map(|r| (r.variable, r.value))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct MlrRow {
    pub standard_order: usize,
    pub estimated: f64,
    pub validated: f64,
}

pub fn read_mlr<R: Read>(source: R) -> Result<Vec<MlrRow>, String> {
    rows(source, "equation estimates")
}
