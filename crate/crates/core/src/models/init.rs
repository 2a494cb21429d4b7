use alloc::vec::Vec;

use rand::Rng as _;

use crate::diffcore::{ParameterSet, Tensor};
use crate::math;
use crate::rng;
use crate::Result;

/// How one named parameter is initialized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayerShape {
    /// `out×in` matrix, Xavier-uniform.
    Weight { out: usize, inp: usize },
    /// Length-`n` vector of zeros.
    Bias(usize),
}

pub fn xavier_bound(fan_in: usize, fan_out: usize) -> f64 {
    math::sqrt(6.0 / (fan_in + fan_out) as f64)
}

/// Xavier-uniform weights (bound `√(6/(fan_in+fan_out))`) and zero biases,
/// drawn in declaration order from a generator seeded with `seed`.
pub fn init_params(layout: &[(&str, LayerShape)], seed: u64) -> Result<ParameterSet> {
    let mut rng = rng::seeded(seed);
    let mut params = ParameterSet::new();
    for &(name, shape) in layout {
        let tensor = match shape {
            LayerShape::Weight { out, inp } => {
                let bound = xavier_bound(inp, out);
                let data: Vec<f64> = (0..out * inp).map(|_| rng.random_range(-bound..=bound)).collect();
                Tensor::matrix(out, inp, data)?
            }
            LayerShape::Bias(n) => Tensor::zeros(&[n]),
        };
        params.insert(name, tensor)?;
    }
    Ok(params)
}
