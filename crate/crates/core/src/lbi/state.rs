use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::diffcore::{AdamConfig, LazyAdam};
use crate::math;
use crate::Result;

/// Unconstrained logits `s_i` with `a_i = sigmoid(s_i)`, so every `a_i` stays
/// strictly inside `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IgnoringState {
    pub logits: Vec<f64>,
    pub optimizer: LazyAdam,
    pub epoch: usize,
}

impl IgnoringState {
    /// All logits at zero, i.e. every `a_i = 0.5`.
    pub fn new(n: usize, opt: AdamConfig) -> Result<Self> {
        Ok(IgnoringState { logits: vec![0.0; n], optimizer: LazyAdam::new(opt, n)?, epoch: 0 })
    }

    pub fn len(&self) -> usize {
        self.logits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logits.is_empty()
    }

    pub fn a(&self, i: usize) -> f64 {
        math::sigmoid(self.logits[i])
    }

    pub fn weights(&self) -> Vec<f64> {
        self.logits.iter().map(|&s| math::sigmoid(s)).collect()
    }

    /// Descends `∂L/∂a_i` for the listed examples through the sigmoid:
    /// `∂L/∂s_i = ∂L/∂a_i · a_i(1 − a_i)`.
    pub fn update(&mut self, idx: &[usize], grad_a: &[f64]) -> Result<()> {
        if let Some(&i) = idx.iter().find(|&&i| i >= self.logits.len()) {
            return Err(crate::Error::Data(alloc::format!(
                "example index {i} out of range for {} ignoring variables",
                self.logits.len()
            )));
        }
        let grad_s: Vec<f64> = idx
            .iter()
            .zip(grad_a)
            .map(|(&i, &g)| {
                let a = self.a(i);
                g * a * (1.0 - a)
            })
            .collect();
        self.optimizer.step(&mut self.logits, idx, &grad_s)
    }
}
