//! Pipeline configuration, read from a TOML file.
//!
//! Relative paths resolve against the directory holding the config file.
//! Every stage seed is taken from the top-level `seed`.

use std::fs;
use std::path::{Path, PathBuf};

use qualitykit::data::{ImputeStrategy, Schema};
use qualitykit::doe::{DesirabilitySpec, Factor};
use qualitykit::ensembles::{BoostConfig, ForestConfig};
use qualitykit::screening::OverrideRule;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub input: InputConfig,
    #[serde(default)]
    pub impute: ImputeConfig,
    /// Compose the response from [0, 1]-scaled components.
    #[serde(default)]
    pub score: Option<ScoreConfig>,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub screening: ScreeningConfig,
    #[serde(default)]
    pub models: ModelsConfig,
    #[serde(default)]
    pub vote: VoteConfig,
    #[serde(default)]
    pub doe: DoeConfig,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("qualitykit-out")
}

/// Either a CSV `path` or a `synthetic` generator spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub synthetic: Option<SyntheticConfig>,
    #[serde(default)]
    pub schema: Schema,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n_rows: usize,
    pub n_noise_vars: usize,
    pub noise_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImputeConfig {
    pub strategy: ImputeStrategy,
    /// `variable,value` CSV for reference-lookup.
    pub reference: Option<PathBuf>,
}

impl Default for ImputeConfig {
    fn default() -> Self {
        ImputeConfig {
            strategy: ImputeStrategy::ColumnMean,
            reference: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreConfig {
    pub output_name: String,
    pub components: Vec<String>,
    /// Equal weights when omitted.
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub test_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { test_fraction: 0.3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScreeningConfig {
    pub k: usize,
    pub n_trees: usize,
    pub min_rows_per_leaf: usize,
}

impl Default for ScreeningConfig {
    fn default() -> Self {
        ScreeningConfig {
            k: 16,
            n_trees: 200,
            min_rows_per_leaf: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelsConfig {
    pub forest: ForestConfig,
    pub boosting: BoostConfig,
    /// k for the nearest-neighbour baseline; `None` skips it.
    pub knn_k: Option<usize>,
    pub ols: bool,
}

impl Default for ModelsConfig {
    fn default() -> Self {
        ModelsConfig {
            forest: ForestConfig::default(),
            boosting: BoostConfig::default(),
            knn_k: Some(5),
            ols: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VoteConfig {
    pub m: usize,
    /// `model,rank,variable` CSV voted instead of the trained models' rankings.
    pub rankings: Option<PathBuf>,
    pub final_count: usize,
    pub overrides: Vec<OverrideRule>,
}

impl Default for VoteConfig {
    fn default() -> Self {
        VoteConfig {
            m: 4,
            rankings: None,
            final_count: 3,
            overrides: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DoeConfig {
    pub enabled: bool,
    pub n_center: usize,
    /// `factor,low,center,high` CSV.
    pub levels: Option<PathBuf>,
    /// Inline levels; take precedence over `levels`.
    pub factors: Option<Vec<Factor>>,
    /// Percentiles of the data used as low/high when no levels are given.
    pub derive_percentiles: [f64; 2],
    /// Design file with measured responses to fit.
    pub responses: Option<PathBuf>,
    pub response: Option<String>,
    /// Defaults to the observed response range with shape 1.
    pub desirability: Option<DesirabilitySpec>,
}

impl Default for DoeConfig {
    fn default() -> Self {
        DoeConfig {
            enabled: true,
            n_center: 3,
            levels: None,
            factors: None,
            derive_percentiles: [0.0, 100.0],
            responses: None,
            response: None,
            desirability: None,
        }
    }
}

impl PipelineConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let mut cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        PipelineConfig::parse(&text, &base)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// SHA-256 of the parsed configuration's JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Checks cross-field constraints and that every referenced file exists.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        match (&self.input.path, &self.input.synthetic) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => return bad("input needs exactly one of `path` or `synthetic`".into()),
        }
        if self.screening.k < self.vote.final_count {
            return bad(format!(
                "screening k = {} is below the final factor count {}",
                self.screening.k, self.vote.final_count
            ));
        }
        if self.vote.m == 0 || self.vote.final_count == 0 {
            return bad("vote m and final_count must be at least 1".into());
        }
        if !(self.split.test_fraction > 0.0 && self.split.test_fraction < 1.0) {
            return bad(format!(
                "test_fraction {} not in (0, 1)",
                self.split.test_fraction
            ));
        }
        let [lo, hi] = self.doe.derive_percentiles;
        if !(0.0 <= lo && lo < hi && hi <= 100.0) {
            return bad(format!(
                "derive_percentiles [{lo}, {hi}] must satisfy 0 <= lo < hi <= 100"
            ));
        }
        if self.doe.responses.is_some() && self.doe.response.is_none() {
            return bad("doe.responses needs doe.response to name the response column".into());
        }
        let paths = [
            ("input.path", &self.input.path),
            ("impute.reference", &self.impute.reference),
            ("vote.rankings", &self.vote.rankings),
            ("doe.levels", &self.doe.levels),
            ("doe.responses", &self.doe.responses),
        ];
        for (key, p) in paths {
            if let Some(p) = p {
                if !self.resolve(p).is_file() {
                    return bad(format!("{key}: file {} not found", p.display()));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[input]\npath = \"d.csv\"\n";

    #[test]
    fn defaults_fill_in() {
        let c = PipelineConfig::parse(MINIMAL, Path::new("/x")).unwrap();
        assert_eq!(c.screening.k, 16);
        assert_eq!(c.screening.n_trees, 200);
        assert_eq!(c.vote.m, 4);
        assert_eq!(c.vote.final_count, 3);
        assert_eq!(c.models.boosting.n_stages, 500);
        assert_eq!(c.resolve(Path::new("d.csv")), PathBuf::from("/x/d.csv"));
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = format!("{MINIMAL}[screening]\nkk = 3\n");
        assert!(matches!(
            PipelineConfig::parse(&text, Path::new(".")),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn cross_field_checks() {
        let text = format!("{MINIMAL}[screening]\nk = 2\n");
        let c = PipelineConfig::parse(&text, Path::new(".")).unwrap();
        assert!(c.validate().is_err());
        let both = "[input]\npath = \"a\"\n[input.synthetic]\nn_rows = 10\nn_noise_vars = 0\nnoise_sd = 0.0\n";
        let c = PipelineConfig::parse(both, Path::new(".")).unwrap();
        assert!(c.validate().is_err());
        let missing = PipelineConfig::parse(MINIMAL, Path::new("/nonexistent")).unwrap();
        assert!(missing
            .validate()
            .unwrap_err()
            .to_string()
            .contains("input.path"));
    }

    #[test]
    fn digest_tracks_content_not_location() {
        let a = PipelineConfig::parse(MINIMAL, Path::new("/a")).unwrap();
        let b = PipelineConfig::parse(MINIMAL, Path::new("/b")).unwrap();
        assert_eq!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
        let mut c = a.clone();
        c.seed = 9;
        assert_ne!(a.digest(), c.digest());
    }
}
