use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::ParameterSet;
use crate::math;
use crate::{Error, Result};

/// Adam hyperparameters. `weight_decay` is decoupled: after the Adam update
/// every parameter is multiplied by `1 − lr·weight_decay`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 0.0 }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.lr)));
        }
        self.validate_betas()
    }

    /// Like [`AdamConfig::validate`] but allows `lr = 0` (a frozen variable).
    pub fn validate_allow_frozen(&self) -> Result<()> {
        if !(self.lr >= 0.0) {
            return Err(Error::Config(format!("learning rate must be non-negative, got {}", self.lr)));
        }
        self.validate_betas()
    }

    fn validate_betas(&self) -> Result<()> {
        let in_range = |b: f64| (0.0..1.0).contains(&b);
        if !in_range(self.beta1) || !in_range(self.beta2) {
            return Err(Error::Config(format!("betas must lie in [0, 1), got ({}, {})", self.beta1, self.beta2)));
        }
        if !(self.eps > 0.0) || !(self.weight_decay >= 0.0) {
            return Err(Error::Config("eps must be positive and weight decay non-negative".into()));
        }
        Ok(())
    }

    /// One bias-corrected update of a single coordinate at step `t ≥ 1`.
    #[inline]
    fn update(&self, t: u64, p: &mut f64, g: f64, m: &mut f64, v: &mut f64) {
        *m = self.beta1 * *m + (1.0 - self.beta1) * g;
        *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
        let m_hat = *m / (1.0 - math::powi(self.beta1, t as i32));
        let v_hat = *v / (1.0 - math::powi(self.beta2, t as i32));
        *p -= self.lr * m_hat / (math::sqrt(v_hat) + self.eps);
        if self.weight_decay > 0.0 {
            *p *= 1.0 - self.lr * self.weight_decay;
        }
    }
}

/// Adam moments for a [`ParameterSet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: ParameterSet,
    pub v: ParameterSet,
    pub t: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &ParameterSet) -> Result<Self> {
        config.validate()?;
        Ok(AdamState { config, m: params.zeros_like(), v: params.zeros_like(), t: 0 })
    }

    pub fn step(&mut self, params: &mut ParameterSet, grads: &ParameterSet) -> Result<()> {
        // layout checks on all three sets
        self.m.dot(params)?;
        self.m.dot(grads)?;
        self.t += 1;
        let t = self.t;
        let cfg = self.config;
        let moments = self.m.iter_mut().zip(self.v.iter_mut());
        for (((_, p), (_, g)), ((_, m), (_, v))) in params.iter_mut().zip(grads.iter()).zip(moments) {
            let (p, m, v) = (p.data_mut(), m.data_mut(), v.data_mut());
            for k in 0..p.len() {
                cfg.update(t, &mut p[k], g.data()[k], &mut m[k], &mut v[k]);
            }
        }
        Ok(())
    }
}

/// Adam over a flat vector where each step touches only a subset of
/// coordinates. Each coordinate keeps its own step count, so bias correction
/// matches what a dense Adam would see for that coordinate alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LazyAdam {
    pub config: AdamConfig,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: Vec<u64>,
}

impl LazyAdam {
    pub fn new(config: AdamConfig, len: usize) -> Result<Self> {
        config.validate_allow_frozen()?;
        Ok(LazyAdam { config, m: vec![0.0; len], v: vec![0.0; len], t: vec![0; len] })
    }

    /// Updates `params[idx[k]]` with gradient `grads[k]`.
    pub fn step(&mut self, params: &mut [f64], idx: &[usize], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || idx.len() != grads.len() {
            return Err(Error::shape("LazyAdam::step", "index/gradient/parameter lengths disagree"));
        }
        for (&i, &g) in idx.iter().zip(grads) {
            if i >= params.len() {
                return Err(Error::Data(format!("index {i} out of range for {} variables", params.len())));
            }
            self.t[i] += 1;
            self.config.update(self.t[i], &mut params[i], g, &mut self.m[i], &mut self.v[i]);
        }
        Ok(())
    }
}
