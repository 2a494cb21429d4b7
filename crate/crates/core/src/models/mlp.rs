use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::init::{init_params, LayerShape};
use super::{check_weights, Objective, PerExampleLoss};
use crate::diffcore::layers::{self, linear};
use crate::diffcore::{cross_entropy_with_softmax, ParameterSet, Tensor};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassExample {
    pub features: Vec<f64>,
    pub label: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpDims {
    pub input: usize,
    pub hidden: usize,
    pub classes: usize,
}

/// One tanh hidden layer and a softmax head:
/// `W1 (H×D), b1 (H), W2 (C×H), b2 (C)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpClassifier {
    pub dims: MlpDims,
    pub params: ParameterSet,
}

impl MlpDims {
    pub fn layout(&self) -> [(&'static str, LayerShape); 4] {
        [
            ("w1", LayerShape::Weight { out: self.hidden, inp: self.input }),
            ("b1", LayerShape::Bias(self.hidden)),
            ("w2", LayerShape::Weight { out: self.classes, inp: self.hidden }),
            ("b2", LayerShape::Bias(self.classes)),
        ]
    }

    fn inputs(&self, batch: &[&ClassExample]) -> Result<(Tensor, Vec<usize>)> {
        let mut x = Vec::with_capacity(batch.len() * self.input);
        let mut y = Vec::with_capacity(batch.len());
        for ex in batch {
            if ex.features.len() != self.input {
                return Err(Error::shape("mlp", format!("{} features for input dim {}", ex.features.len(), self.input)));
            }
            if ex.label >= self.classes {
                return Err(Error::Data(format!("label {} out of range for {} classes", ex.label, self.classes)));
            }
            x.extend_from_slice(&ex.features);
            y.push(ex.label);
        }
        Ok((Tensor::matrix(batch.len(), self.input, x)?, y))
    }

    fn forward(&self, p: &ParameterSet, x: &Tensor) -> Result<(Tensor, Tensor)> {
        let h = linear(x, p.tensor("w1")?, p.tensor("b1")?)?.tanh();
        let logits = linear(&h, p.tensor("w2")?, p.tensor("b2")?)?;
        Ok((h, logits))
    }

    pub fn logits(&self, p: &ParameterSet, features: &[&[f64]]) -> Result<Tensor> {
        let data: Vec<f64> = features.iter().flat_map(|f| f.iter().copied()).collect();
        let x = Tensor::matrix(features.len(), self.input, data)?;
        Ok(self.forward(p, &x)?.1)
    }
}

impl MlpClassifier {
    pub fn new(dims: MlpDims, seed: u64) -> Result<Self> {
        if dims.input == 0 || dims.hidden == 0 || dims.classes == 0 {
            return Err(Error::Config("MLP dimensions must be positive".into()));
        }
        Ok(MlpClassifier { dims, params: init_params(&dims.layout(), seed)? })
    }

    /// Per-example softmax cross-entropy.
    pub fn forward_loss(&self, batch: &[&ClassExample]) -> Result<PerExampleLoss> {
        self.dims.losses(&self.params, batch)
    }
}

impl Objective for MlpDims {
    type Example = ClassExample;

    fn losses(&self, params: &ParameterSet, batch: &[&ClassExample]) -> Result<PerExampleLoss> {
        let (x, y) = self.inputs(batch)?;
        let (_, logits) = self.forward(params, &x)?;
        Ok(PerExampleLoss(cross_entropy_with_softmax(&logits, &y)?))
    }

    fn weighted_grad(
        &self,
        p: &ParameterSet,
        batch: &[&ClassExample],
        weights: &[f64],
    ) -> Result<(PerExampleLoss, ParameterSet)> {
        check_weights(batch.len(), weights)?;
        let (x, y) = self.inputs(batch)?;
        let (h, logits) = self.forward(p, &x)?;
        let losses = cross_entropy_with_softmax(&logits, &y)?;
        let dlogits = layers::softmax_cross_entropy_backward(&logits, &y, weights)?;
        let (dh, dw2, db2) = layers::linear_backward(&h, p.tensor("w2")?, &dlogits)?;
        let dpre = layers::tanh_backward(&h, &dh)?;
        let (dw1, db1) = layers::linear_backward_params(&x, &dpre)?;
        let mut g = ParameterSet::new();
        g.insert("w1", dw1)?;
        g.insert("b1", db1)?;
        g.insert("w2", dw2)?;
        g.insert("b2", db2)?;
        Ok((PerExampleLoss(losses), g))
    }
}
