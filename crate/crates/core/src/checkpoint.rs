//! Versioned JSON container for trained models.
//!
//! ```json
//! { "format": "marketcast-checkpoint", "version": 1,
//!   "model": { "kind": "neural", "name": "GRU", "time_step": 10, "seed": 42,
//!              "network": {..}, "train_config": {..}, "scaler": {"min":..,"max":..} } }
//! ```
//!
//! or `"model": { "kind": "arima", "model": {..} }`. Floats are written with
//! shortest round-trip formatting so a load reproduces every parameter
//! bit for bit.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arima::ArimaModel;
use crate::neural::{NetworkModel, TrainConfig};
use crate::series::ScalerParams;
use crate::zoo::ZooName;

pub const FORMAT: &str = "marketcast-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint i/o on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed checkpoint: {0}")]
    Format(#[from] serde_json::Error),
    #[error("unsupported checkpoint {format:?} version {version}")]
    Version { format: String, version: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SavedModel {
    Neural {
        name: ZooName,
        time_step: usize,
        seed: u64,
        network: NetworkModel,
        train_config: TrainConfig,
        scaler: ScalerParams,
    },
    Arima {
        model: ArimaModel,
    },
}

impl SavedModel {
    pub fn name(&self) -> ZooName {
        match self {
            SavedModel::Neural { name, .. } => *name,
            SavedModel::Arima { .. } => ZooName::Arima,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub model: SavedModel,
}

impl Checkpoint {
    pub fn new(model: SavedModel) -> Self {
        Self {
            format: FORMAT.to_string(),
            version: VERSION,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String, CheckpointError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, CheckpointError> {
        let ckpt: Checkpoint = serde_json::from_str(text)?;
        if ckpt.format != FORMAT || ckpt.version != VERSION {
            return Err(CheckpointError::Version {
                format: ckpt.format,
                version: ckpt.version,
            });
        }
        Ok(ckpt)
    }

    /// Writes to a sibling temporary file and renames it into place.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
        let path = path.as_ref();
        let io = |source| CheckpointError::Io {
            path: path.display().to_string(),
            source,
        };
        let tmp = path.with_extension("json.tmp");
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(self.to_json()?.as_bytes()).map_err(io)?;
        f.sync_all().map_err(io)?;
        fs::rename(&tmp, path).map_err(io)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CheckpointError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| CheckpointError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }
}
