//! Batched layer primitives with their hand-derived backward passes.
//!
//! Activations are `B×n` matrices, one row per example. Linear weights are
//! stored `out×in` so a layer computes `X·Wᵀ + b`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::Tensor;
use crate::math;
use crate::{Error, Result};

pub fn linear(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
    x.matmul_t(w)?.add_bias(b)
}

/// Gradients of `Y = X·Wᵀ + b` given `dY`: returns `(dX, dW, db)`.
pub fn linear_backward(x: &Tensor, w: &Tensor, dy: &Tensor) -> Result<(Tensor, Tensor, Tensor)> {
    let dx = dy.matmul(w)?;
    let dw = dy.t_matmul(x)?;
    let db = dy.sum_rows()?;
    Ok((dx, dw, db))
}

/// Same as [`linear_backward`] without the input gradient.
pub fn linear_backward_params(x: &Tensor, dy: &Tensor) -> Result<(Tensor, Tensor)> {
    Ok((dy.t_matmul(x)?, dy.sum_rows()?))
}

/// `dX` for `Y = tanh(X)`, expressed through the output `Y`.
pub fn tanh_backward(y: &Tensor, dy: &Tensor) -> Result<Tensor> {
    let local = y.map(|t| 1.0 - t * t);
    local.mul(dy)
}

pub fn relu_backward(x: &Tensor, dy: &Tensor) -> Result<Tensor> {
    let local = x.map(|v| if v > 0.0 { 1.0 } else { 0.0 });
    local.mul(dy)
}

/// `dX` for `Y = sigmoid(X)`, expressed through the output `Y`.
pub fn sigmoid_backward(y: &Tensor, dy: &Tensor) -> Result<Tensor> {
    let local = y.map(|s| s * (1.0 - s));
    local.mul(dy)
}

/// Gradient of `Σ_b weight_b · CE(softmax(logits_b), label_b)` w.r.t. the logits.
pub fn softmax_cross_entropy_backward(logits: &Tensor, labels: &[usize], weights: &[f64]) -> Result<Tensor> {
    if logits.rows() != labels.len() || labels.len() != weights.len() {
        return Err(Error::shape("softmax_cross_entropy_backward", "rows, labels and weights disagree"));
    }
    let mut d = logits.softmax();
    let c = d.cols();
    for (i, (&y, &w)) in labels.iter().zip(weights).enumerate() {
        if y >= c {
            return Err(Error::Data(format!("label {y} out of range for {c} classes")));
        }
        let row = d.row_mut(i);
        row[y] -= 1.0;
        for v in row.iter_mut() {
            *v *= w;
        }
    }
    Ok(d)
}

/// Gradient of `Σ_b weight_b · BCE(sigmoid(z_b), y_b)` w.r.t. the logits `z`.
pub fn bce_with_logits_backward(logits: &[f64], targets: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
    if logits.len() != targets.len() || logits.len() != weights.len() {
        return Err(Error::shape("bce_with_logits_backward", "logits, targets and weights disagree"));
    }
    Ok(logits
        .iter()
        .zip(targets)
        .zip(weights)
        .map(|((&z, &y), &w)| w * (math::sigmoid(z) - y))
        .collect())
}

/// Mean of embedding rows per token sequence: `B×E` from a `V×E` table.
/// Empty sequences pool to the zero vector.
pub fn mean_pool(table: &Tensor, sequences: &[&[u32]]) -> Result<Tensor> {
    let vocab = table.rows();
    let e = table.cols();
    let mut out = vec![0.0; sequences.len() * e];
    for (b, seq) in sequences.iter().enumerate() {
        let row = &mut out[b * e..(b + 1) * e];
        for &tok in seq.iter() {
            let tok = tok as usize;
            if tok >= vocab {
                return Err(Error::Data(format!("token id {tok} outside vocabulary of {vocab}")));
            }
            for (r, t) in row.iter_mut().zip(table.row(tok)) {
                *r += t;
            }
        }
        if !seq.is_empty() {
            let inv = 1.0 / seq.len() as f64;
            row.iter_mut().for_each(|r| *r *= inv);
        }
    }
    Tensor::matrix(sequences.len(), e, out)
}

/// Scatters pooled gradients back to the embedding table.
pub fn mean_pool_backward(table_shape: &[usize], sequences: &[&[u32]], dpooled: &Tensor) -> Result<Tensor> {
    let mut d = Tensor::zeros(table_shape);
    let e = d.cols();
    if dpooled.cols() != e || dpooled.rows() != sequences.len() {
        return Err(Error::shape("mean_pool_backward", "pooled gradient does not match the table"));
    }
    for (b, seq) in sequences.iter().enumerate() {
        if seq.is_empty() {
            continue;
        }
        let inv = 1.0 / seq.len() as f64;
        for &tok in seq.iter() {
            let row = d.row_mut(tok as usize);
            for (r, g) in row.iter_mut().zip(dpooled.row(b)) {
                *r += inv * g;
            }
        }
    }
    Ok(d)
}
