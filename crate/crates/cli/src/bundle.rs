//! Self-contained trained-model file.

use std::path::Path;

use boostal::data::{ColumnSchema, EncoderState};
use boostal::uncertainty::LeafCache;
use boostal::{FeatureMatrix, Model};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const BUNDLE_FORMAT_VERSION: u32 = 1;

/// Encoded training rows kept so IBUG scores can be computed after reload.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IbugRows {
    pub x: FeatureMatrix,
    pub targets: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelBundle {
    pub format_version: u32,
    pub schema: ColumnSchema,
    pub class_names: Option<Vec<String>>,
    pub encoder: EncoderState,
    pub model: Model,
    pub ibug: Option<IbugRows>,
}

impl ModelBundle {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let bundle: Self =
            serde_json::from_str(&text).map_err(|e| CliError::new("model", format!("{}: {e}", path.display())))?;
        if bundle.format_version != BUNDLE_FORMAT_VERSION {
            return Err(CliError::new(
                "model",
                format!(
                    "unsupported bundle format_version {} (expected {BUNDLE_FORMAT_VERSION})",
                    bundle.format_version
                ),
            ));
        }
        Ok(bundle)
    }

    pub fn leaf_cache(&self) -> Result<Option<LeafCache>, CliError> {
        self.ibug.as_ref().map(|r| LeafCache::build(&self.model, &r.x)).transpose().map_err(CliError::from)
    }
}
