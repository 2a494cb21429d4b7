use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{check_weights, Objective, PerExampleLoss};
use crate::diffcore::{ParameterSet, Tensor};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionExample {
    pub x: Vec<f64>,
    pub y: f64,
}

/// Bias-free linear regression with loss `½(w·x − y)²`. Small enough that
/// hypergradients can be checked by hand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeastSquares {
    pub dim: usize,
}

impl LeastSquares {
    pub fn params(&self, w: &[f64]) -> Result<ParameterSet> {
        if w.len() != self.dim {
            return Err(Error::shape("LeastSquares::params", format!("{} weights for dim {}", w.len(), self.dim)));
        }
        let mut p = ParameterSet::new();
        p.insert("w", Tensor::vector(w.to_vec()))?;
        Ok(p)
    }

    fn residual(&self, w: &[f64], ex: &RegressionExample) -> Result<f64> {
        if ex.x.len() != self.dim {
            return Err(Error::shape("LeastSquares", format!("input of length {} for dim {}", ex.x.len(), self.dim)));
        }
        Ok(w.iter().zip(&ex.x).map(|(a, b)| a * b).sum::<f64>() - ex.y)
    }
}

impl Objective for LeastSquares {
    type Example = RegressionExample;

    fn losses(&self, params: &ParameterSet, batch: &[&RegressionExample]) -> Result<PerExampleLoss> {
        let w = params.tensor("w")?.data();
        let losses = batch
            .iter()
            .map(|ex| self.residual(w, ex).map(|r| 0.5 * r * r))
            .collect::<Result<Vec<_>>>()?;
        Ok(PerExampleLoss(losses))
    }

    fn weighted_grad(
        &self,
        params: &ParameterSet,
        batch: &[&RegressionExample],
        weights: &[f64],
    ) -> Result<(PerExampleLoss, ParameterSet)> {
        check_weights(batch.len(), weights)?;
        let w = params.tensor("w")?.data();
        let mut grad = alloc::vec![0.0; self.dim];
        let mut losses = Vec::with_capacity(batch.len());
        for (ex, &a) in batch.iter().zip(weights) {
            let r = self.residual(w, ex)?;
            losses.push(0.5 * r * r);
            for (g, x) in grad.iter_mut().zip(&ex.x) {
                *g += a * r * x;
            }
        }
        let mut g = ParameterSet::new();
        g.insert("w", Tensor::vector(grad))?;
        Ok((PerExampleLoss(losses), g))
    }
}
