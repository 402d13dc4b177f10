//! On-disk model format: one JSON document holding the model, the scaler fitted
//! alongside it, and the schema it expects.
//!
//! ```text
//! {
//!   "format": "flowlens-model",
//!   "format_version": 1,
//!   "schema": "netflow_v2_style",          // schema name
//!   "schema_version": 1,
//!   "schema_fingerprint": "…",             // fingerprint of the learnable columns
//!   "feature_names": [...],                // learnable columns, in order
//!   "scaler": {"min": [...], "max": [...]},
//!   "model": {"kind": "rf", ...} | {"kind": "dff", ...},
//!   "config_hash": "…",
//!   "seed": 0
//! }
//! ```
//!
//! Trees are stored as flat node arrays (children by index), networks as
//! row-major weight matrices.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Predictor, ScaledModel, TrainedModel};
use crate::dataset::MinMaxScaler;
use crate::flow_meter::{FeatureSchema, SchemaName};
use crate::{Error, Result};

pub const FORMAT: &str = "flowlens-model";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedModel {
    pub format: String,
    pub format_version: u32,
    pub schema: SchemaName,
    pub schema_version: u32,
    pub schema_fingerprint: String,
    pub feature_names: Vec<String>,
    pub scaler: MinMaxScaler,
    pub model: TrainedModel,
    pub config_hash: String,
    pub seed: u64,
}

impl SavedModel {
    pub fn new(schema: &FeatureSchema, scaler: MinMaxScaler, model: TrainedModel, config_hash: String, seed: u64) -> Result<Self> {
        let learnable = schema.learnable_only();
        if scaler.width() != learnable.width() || model.n_features() != learnable.width() {
            return Err(Error::WidthMismatch { expected: learnable.width(), got: model.n_features() });
        }
        Ok(Self {
            format: FORMAT.to_string(),
            format_version: FORMAT_VERSION,
            schema: schema.name,
            schema_version: schema.version,
            schema_fingerprint: learnable.fingerprint(),
            feature_names: learnable.column_names().map(str::to_string).collect(),
            scaler,
            model,
            config_hash,
            seed,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let saved: SavedModel = serde_json::from_str(text)?;
        if saved.format != FORMAT {
            return Err(Error::Unsupported(format!("not a model file (format '{}')", saved.format)));
        }
        if saved.format_version != FORMAT_VERSION {
            return Err(Error::Unsupported(format!("model format version {} (expected {FORMAT_VERSION})", saved.format_version)));
        }
        let width = saved.feature_names.len();
        if saved.scaler.width() != width || saved.model.n_features() != width {
            return Err(Error::WidthMismatch { expected: width, got: saved.model.n_features() });
        }
        Ok(saved)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Fails unless `schema` has exactly the learnable columns the model was trained on.
    pub fn check_schema(&self, schema: &FeatureSchema) -> Result<()> {
        let found = schema.learnable_only().fingerprint();
        if found != self.schema_fingerprint {
            return Err(Error::FingerprintMismatch { expected: self.schema_fingerprint.clone(), found });
        }
        Ok(())
    }

    /// Model taking raw (unscaled) learnable features.
    pub fn pipeline(&self) -> ScaledModel<'_, TrainedModel> {
        ScaledModel { scaler: &self.scaler, model: &self.model }
    }
}
