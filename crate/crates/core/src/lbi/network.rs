use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::diffcore::layers::{self, linear};
use crate::diffcore::{ParameterSet, Tensor};
use crate::models::{init_params, LayerShape};
use crate::{Error, Result};

/// Small MLP `φ` producing ignoring variables from example features:
/// `a = sigmoid(w2 · tanh(W1 f + b1) + b2)`. Replaces one free variable per
/// example when the training set is too large for that.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IgnoringNetwork {
    pub input: usize,
    pub hidden: usize,
    pub params: ParameterSet,
}

impl IgnoringNetwork {
    fn layout(input: usize, hidden: usize) -> [(&'static str, LayerShape); 4] {
        [
            ("w1", LayerShape::Weight { out: hidden, inp: input }),
            ("b1", LayerShape::Bias(hidden)),
            ("w2", LayerShape::Weight { out: 1, inp: hidden }),
            ("b2", LayerShape::Bias(1)),
        ]
    }

    pub fn new(input: usize, hidden: usize, seed: u64) -> Result<Self> {
        if input == 0 || hidden == 0 {
            return Err(Error::Config("ignoring network dimensions must be positive".into()));
        }
        Ok(IgnoringNetwork { input, hidden, params: init_params(&Self::layout(input, hidden), seed)? })
    }

    fn features(&self, features: &[&[f64]]) -> Result<Tensor> {
        let mut data = Vec::with_capacity(features.len() * self.input);
        for f in features {
            if f.len() != self.input {
                return Err(Error::shape(
                    "ignoring_network",
                    alloc::format!("feature of length {} for input dim {}", f.len(), self.input),
                ));
            }
            data.extend_from_slice(f);
        }
        Tensor::matrix(features.len(), self.input, data)
    }

    fn run(&self, p: &ParameterSet, x: &Tensor) -> Result<(Tensor, Tensor)> {
        let h = linear(x, p.tensor("w1")?, p.tensor("b1")?)?.tanh();
        let a = linear(&h, p.tensor("w2")?, p.tensor("b2")?)?.sigmoid();
        Ok((h, a))
    }

    /// `a_i = sigmoid(φ(feature_i))`.
    pub fn forward(&self, features: &[&[f64]]) -> Result<Vec<f64>> {
        self.forward_with(&self.params, features)
    }

    pub fn forward_with(&self, params: &ParameterSet, features: &[&[f64]]) -> Result<Vec<f64>> {
        let x = self.features(features)?;
        Ok(self.run(params, &x)?.1.into_data())
    }

    /// Chains per-example `∂L/∂a_i` into `∂L/∂φ`.
    pub fn backward(&self, features: &[&[f64]], grad_a: &[f64]) -> Result<ParameterSet> {
        let p = &self.params;
        let x = self.features(features)?;
        let (h, a) = self.run(p, &x)?;
        let da = Tensor::matrix(features.len(), 1, grad_a.to_vec())?;
        let dz = layers::sigmoid_backward(&a, &da)?;
        let (dh, dw2, db2) = layers::linear_backward(&h, p.tensor("w2")?, &dz)?;
        let dpre = layers::tanh_backward(&h, &dh)?;
        let (dw1, db1) = layers::linear_backward_params(&x, &dpre)?;
        let mut g = ParameterSet::new();
        g.insert("w1", dw1)?;
        g.insert("b1", db1)?;
        g.insert("w2", dw2)?;
        g.insert("b2", db2)?;
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffcore::finite_diff_grad;
    use crate::lbi::{hypergrad_fd, unrolled_step};
    use crate::models::{LeastSquares, Objective, RegressionExample};
    use alloc::vec;

    #[test]
    fn zero_network_gives_half() {
        let mut net = IgnoringNetwork::new(3, 4, 1).unwrap();
        net.params.scale(0.0);
        let a = net.forward(&[&[1.0, 2.0, 3.0], &[-1.0, 0.0, 5.0]]).unwrap();
        assert_eq!(a, vec![0.5, 0.5]);
    }

    #[test]
    fn identical_features_identical_a() {
        let net = IgnoringNetwork::new(2, 3, 7).unwrap();
        let a = net.forward(&[&[0.3, -0.2], &[0.3, -0.2]]).unwrap();
        assert_eq!(a[0], a[1]);
    }

    #[test]
    fn gradient_into_phi_matches_unrolled_finite_differences() {
        let m = LeastSquares { dim: 2 };
        let w = m.params(&[0.1, -0.3]).unwrap();
        let train = [
            RegressionExample { x: vec![1.0, 0.5], y: 1.0 },
            RegressionExample { x: vec![-0.5, 1.0], y: -2.0 },
        ];
        let val = [RegressionExample { x: vec![0.7, 0.2], y: 0.4 }];
        let (tr, va): (Vec<_>, Vec<_>) = (train.iter().collect(), val.iter().collect());
        let feats: [&[f64]; 2] = [&[0.2, 1.0], &[-0.4, 0.3]];
        let net = IgnoringNetwork::new(2, 3, 4).unwrap();
        let xi = 0.2;

        let a = net.forward(&feats).unwrap();
        let ga = hypergrad_fd(&m, &w, &a, &tr, &va, xi, 1e-4).unwrap();
        let analytic = net.backward(&feats, &ga).unwrap();

        let numeric = finite_diff_grad(
            |p| {
                let a = net.forward_with(p, &feats).unwrap();
                let w1 = unrolled_step(&m, &w, &a, &tr, xi).unwrap();
                m.losses(&w1, &va).unwrap().sum()
            },
            &net.params,
            1e-5,
        );
        let (x, y) = (analytic.flatten(), numeric.flatten());
        for (p, q) in x.iter().zip(&y) {
            let rel = (p - q).abs() / p.abs().max(q.abs()).max(1e-8);
            assert!(rel < 1e-2, "{p} vs {q}");
        }
    }
}
