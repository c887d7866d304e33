//! Versioned JSON model files.
//!
//! ```json
//! { "format": "qualitykit-model", "version": 1, "model": { "kind": "forest", ... } }
//! ```

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{BaselineModel, BoostedModel, EnsembleError, ForestModel, RegressionTree, Regressor};

pub const MODEL_FORMAT: &str = "qualitykit-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "body", rename_all = "lowercase")]
pub enum SavedModel {
    Tree(RegressionTree),
    Forest(ForestModel),
    Boosted(BoostedModel),
    Baseline(BaselineModel),
}

impl SavedModel {
    pub fn as_regressor(&self) -> &dyn Regressor {
        match self {
            SavedModel::Tree(m) => m,
            SavedModel::Forest(m) => m,
            SavedModel::Boosted(m) => m,
            SavedModel::Baseline(m) => m,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    format: String,
    version: u32,
    model: SavedModel,
}

pub fn save_model<W: Write>(model: &SavedModel, sink: W) -> Result<(), EnsembleError> {
    let env = Envelope {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_FORMAT_VERSION,
        model: model.clone(),
    };
    serde_json::to_writer(sink, &env).map_err(|e| EnsembleError::Format(e.to_string()))
}

pub fn load_model<R: Read>(source: R) -> Result<SavedModel, EnsembleError> {
    let env: Envelope =
        serde_json::from_reader(source).map_err(|e| EnsembleError::Format(e.to_string()))?;
    if env.format != MODEL_FORMAT {
        return Err(EnsembleError::Format(format!(
            "unexpected format '{}'",
            env.format
        )));
    }
    if env.version != MODEL_FORMAT_VERSION {
        return Err(EnsembleError::Format(format!(
            "unsupported model file version {}",
            env.version
        )));
    }
    Ok(env.model)
}
