//! The run configuration shared by every subcommand.

use std::path::Path;

use lbi_core::data::{CorruptionSpec, SplitSpec, SyntheticSpec};
use lbi_core::lbi::{EpsScaling, LbiConfig};
use lbi_core::rng;
use lbi_core::ssl::PretrainConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub embed: usize,
    pub hidden: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { embed: 16, hidden: 32 }
    }
}

/// Random finite-difference vs oracle comparisons run by `hypergrad-check`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HypergradCheckConfig {
    pub instances: usize,
    pub max_train: usize,
    pub max_val: usize,
    pub max_dim: usize,
    pub xi: f64,
    pub eps: f64,
    pub eps_scaling: EpsScaling,
    /// Components with smaller |oracle| are excluded from relative errors.
    pub rel_floor: f64,
    pub tolerance: f64,
}

impl Default for HypergradCheckConfig {
    fn default() -> Self {
        HypergradCheckConfig {
            instances: 20,
            max_train: 10,
            max_val: 5,
            max_dim: 4,
            xi: 0.1,
            eps: 1e-4,
            eps_scaling: EpsScaling::GradNorm,
            rel_floor: 1e-8,
            tolerance: 1e-2,
        }
    }
}

/// Everything a run depends on. Stage seeds inside the sections are
/// replaced by values derived from `seed` when the config is resolved, so
/// `seed` alone determines every random draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub synthetic: SyntheticSpec,
    pub corruption: CorruptionSpec,
    pub split: SplitSpec,
    pub model: ModelConfig,
    /// Fraction of the training split whose answers are used; the rest is
    /// unlabeled data for image/question pretraining.
    pub label_fraction: f64,
    pub lbi: LbiConfig,
    pub pretrain: PretrainConfig,
    pub hypergrad_check: HypergradCheckConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            synthetic: SyntheticSpec::default(),
            corruption: CorruptionSpec { label_flip_rate: 0.3, ..CorruptionSpec::default() },
            split: SplitSpec::default(),
            model: ModelConfig::default(),
            label_fraction: 1.0,
            lbi: LbiConfig::default(),
            pretrain: PretrainConfig::default(),
            hypergrad_check: HypergradCheckConfig::default(),
        }
    }
}

/// Stream ids for [`rng::derive`].
pub mod streams {
    pub const SYNTHETIC: u64 = 0;
    pub const SPLIT: u64 = 1;
    pub const CORRUPTION: u64 = 2;
    pub const LABELED_SUBSET: u64 = 3;
    pub const HYPERGRAD_CHECK: u64 = 4;
    pub const LBI: u64 = 10;
    pub const PRETRAIN: u64 = 11;
    pub const MODEL: u64 = 12;
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        crate::io::read_json(path)
    }

    /// Stage seeds filled in from `seed`, then validated.
    pub fn resolved(mut self) -> Result<Self> {
        let s = self.seed;
        self.synthetic.seed = rng::derive(s, streams::SYNTHETIC);
        self.split.seed = rng::derive(s, streams::SPLIT);
        self.corruption.seed = rng::derive(s, streams::CORRUPTION);
        self.lbi.seed = rng::derive(s, streams::LBI);
        self.pretrain.seed = rng::derive(s, streams::PRETRAIN);
        self.validate()?;
        Ok(self)
    }

    pub fn with_seed(&self, seed: u64) -> Result<Self> {
        RunConfig { seed, ..self.clone() }.resolved()
    }

    pub fn model_seed(&self) -> u64 {
        rng::derive(self.seed, streams::MODEL)
    }

    pub fn validate(&self) -> Result<()> {
        self.corruption.validate()?;
        self.lbi.validate()?;
        if !self.pretrain.weights.is_disabled() {
            self.pretrain.validate()?;
        }
        if !(self.label_fraction > 0.0 && self.label_fraction <= 1.0) {
            return Err(lbi_core::Error::Config(format!("label_fraction must lie in (0, 1], got {}", self.label_fraction)).into());
        }
        if self.model.embed == 0 || self.model.hidden == 0 {
            return Err(lbi_core::Error::Config("model sizes must be positive".into()).into());
        }
        let h = &self.hypergrad_check;
        if h.max_train == 0 || h.max_val == 0 || h.max_dim == 0 || !(h.tolerance > 0.0) || !(h.xi > 0.0) || !(h.eps > 0.0) {
            return Err(lbi_core::Error::Config("hypergrad_check sizes, xi, eps and tolerance must be positive".into()).into());
        }
        Ok(())
    }

    /// SHA-256 of the compact JSON encoding.
    pub fn hash(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("config serializes"))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn parse_config(text: &str, origin: &Path) -> Result<RunConfig> {
    serde_json::from_str(text).map_err(|e| CliError::Parse { path: origin.to_path_buf(), line: e.line(), detail: e.to_string() })
}
