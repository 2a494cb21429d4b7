use std::path::Path;

use lbi_core::data::Codebook;
use lbi_core::models::TwoTowerModel;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::io;

pub const CHECKPOINT_FORMAT: &str = "lbi-two-tower/1";

/// A model with the codebook it was trained against. Floats are written in
/// shortest round-trip decimal form, so save → load is exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub config_hash: String,
    pub model: TwoTowerModel,
    pub codebook: Codebook,
}

impl Checkpoint {
    pub fn new(model: TwoTowerModel, codebook: Codebook, config_hash: String) -> Self {
        Checkpoint { format: CHECKPOINT_FORMAT.to_string(), config_hash, model, codebook }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ck: Checkpoint = io::read_json(path)?;
        if ck.format != CHECKPOINT_FORMAT {
            return Err(CliError::Format { path: path.to_path_buf(), detail: format!("unsupported checkpoint format `{}`", ck.format) });
        }
        let reference = ck.model.dims.init(0)?;
        let expected: Vec<(&str, &[usize])> = reference.iter().map(|(n, t)| (n, t.shape())).collect();
        let found: Vec<(&str, &[usize])> = ck.model.params.iter().map(|(n, t)| (n, t.shape())).collect();
        let consistent = ck.model.params.iter().all(|(_, t)| t.data().len() == t.shape().iter().product::<usize>());
        if expected != found || !consistent {
            return Err(CliError::Format { path: path.to_path_buf(), detail: "tensors do not match the stored dimensions".into() });
        }
        Ok(ck)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        io::json_bytes(self)
    }
}
