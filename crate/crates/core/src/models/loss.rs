use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// One non-negative loss per batch element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerExampleLoss(pub Vec<f64>);

impl PerExampleLoss {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        if self.0.is_empty() {
            0.0
        } else {
            self.sum() / self.0.len() as f64
        }
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}
