//! Versioned JSON model checkpoints: hyperparameter map, named parameter
//! tensors with shapes, and the initialization seed. Loading fails on any
//! shape mismatch against the shapes the config implies.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::autodiff::Tensor;
use crate::nn::{ModelConfig, RecurrentGcn};
use crate::{Error, Result};

pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema_version: u32,
    pub config: ModelConfig,
    pub seed: u64,
    pub params: Vec<CheckpointParam>,
}

#[derive(Serialize, Deserialize)]
pub struct CheckpointParam {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl Checkpoint {
    pub fn from_model(model: &RecurrentGcn) -> Checkpoint {
        Checkpoint {
            schema_version: CHECKPOINT_SCHEMA_VERSION,
            config: *model.config(),
            seed: model.seed(),
            params: model
                .parameters()
                .iter()
                .map(|p| {
                    let (rows, cols) = p.shape();
                    CheckpointParam {
                        name: p.name().to_string(),
                        rows,
                        cols,
                        values: p.value().data().to_vec(),
                    }
                })
                .collect(),
        }
    }

    pub fn into_model(self) -> Result<RecurrentGcn> {
        if self.schema_version != CHECKPOINT_SCHEMA_VERSION {
            return Err(Error::Checkpoint(format!(
                "unknown schema version {}",
                self.schema_version
            )));
        }
        let model = RecurrentGcn::new(self.config, self.seed)?;
        let params = model.parameters();
        if params.len() != self.params.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} parameters, checkpoint has {}",
                params.len(),
                self.params.len()
            )));
        }
        for stored in &self.params {
            let param = params
                .iter()
                .find(|p| p.name() == stored.name)
                .ok_or_else(|| {
                    Error::Checkpoint(format!("unexpected parameter {:?}", stored.name))
                })?;
            if param.shape() != (stored.rows, stored.cols) {
                return Err(Error::Checkpoint(format!(
                    "parameter {:?} has shape {}x{}, config implies {}x{}",
                    stored.name,
                    stored.rows,
                    stored.cols,
                    param.shape().0,
                    param.shape().1
                )));
            }
            let value = Tensor::from_vec(stored.rows, stored.cols, stored.values.clone())
                .map_err(|e| Error::Checkpoint(format!("parameter {:?}: {e}", stored.name)))?;
            param.set_value(&value)?;
        }
        Ok(model)
    }
}

pub fn save_checkpoint(model: &RecurrentGcn, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(&Checkpoint::from_model(model))?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<RecurrentGcn> {
    let text = std::fs::read_to_string(path)?;
    let checkpoint: Checkpoint =
        serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    checkpoint.into_model()
}
