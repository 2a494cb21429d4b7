use alloc::format;

use serde::{Deserialize, Serialize};

use crate::diffcore::AdamConfig;
use crate::{Error, Result};

/// How the finite-difference radius is derived from [`LbiConfig::eps`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsScaling {
    /// `eps / (1 + ‖∇_{W'} L_val‖)`
    GradNorm,
    /// `eps` as given
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LbiConfig {
    /// Learn ignoring variables; `false` trains on the plain loss sum.
    pub ignoring: bool,
    /// Unroll step; `None` uses the weight learning rate.
    pub xi: Option<f64>,
    pub eps: f64,
    pub eps_scaling: EpsScaling,
    /// Optimizer for the model weights.
    pub weights_opt: AdamConfig,
    /// Optimizer for the ignoring logits (or the ignoring network).
    pub ignoring_opt: AdamConfig,
    pub epochs: usize,
    pub train_batch: usize,
    pub val_batch: usize,
    pub seed: u64,
    /// Retrain after dropping examples with `a_i` below this.
    pub removal_threshold: Option<f64>,
}

impl Default for LbiConfig {
    fn default() -> Self {
        LbiConfig {
            ignoring: true,
            xi: None,
            eps: 1e-4,
            eps_scaling: EpsScaling::GradNorm,
            weights_opt: AdamConfig { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 0.0 },
            ignoring_opt: AdamConfig { lr: 0.01, beta1: 0.5, beta2: 0.999, eps: 1e-8, weight_decay: 3e-4 },
            epochs: 20,
            train_batch: 64,
            val_batch: 64,
            seed: 0,
            removal_threshold: Some(0.5),
        }
    }
}

impl LbiConfig {
    pub fn xi(&self) -> f64 {
        self.xi.unwrap_or(self.weights_opt.lr)
    }

    pub fn validate(&self) -> Result<()> {
        self.weights_opt.validate()?;
        self.ignoring_opt.validate_allow_frozen()?;
        if !(self.xi() > 0.0) || !(self.eps > 0.0) {
            return Err(Error::Config(format!("xi and eps must be positive, got {} and {}", self.xi(), self.eps)));
        }
        if self.train_batch == 0 || self.val_batch == 0 {
            return Err(Error::Config("batch sizes must be positive".into()));
        }
        if let Some(t) = self.removal_threshold {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::Config(format!("removal threshold must lie in [0, 1], got {t}")));
            }
        }
        Ok(())
    }
}
