use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::config::EpsScaling;
use crate::diffcore::ParameterSet;
use crate::models::Objective;
use crate::{Error, Result};

/// Step on `a_i` used by [`hypergrad_exact`].
pub const EXACT_STEP: f64 = 1e-6;

/// `Σ_b a[ids_b] · losses_b`.
pub fn weighted_train_loss(a: &[f64], ids: &[usize], losses: &[f64]) -> Result<f64> {
    Ok(weighted_train_loss_grad(a, ids, losses)?.0)
}

/// The weighted loss and its gradient with respect to the batch's `a`
/// entries, which is the per-example loss vector itself.
pub fn weighted_train_loss_grad(a: &[f64], ids: &[usize], losses: &[f64]) -> Result<(f64, Vec<f64>)> {
    if ids.len() != losses.len() {
        return Err(Error::shape("weighted_train_loss", format!("{} ids vs {} losses", ids.len(), losses.len())));
    }
    let mut total = 0.0;
    let mut grad = Vec::with_capacity(ids.len());
    for (&i, &l) in ids.iter().zip(losses) {
        let w = *a
            .get(i)
            .ok_or_else(|| Error::Data(format!("example id {i} out of range for {} ignoring variables", a.len())))?;
        total += w * l;
        grad.push(l);
    }
    Ok((total, grad))
}

/// `W' = W − ξ ∇_W Σ_b a_b L_b(W)`, plain gradient descent. `a_batch` is
/// aligned with `batch`.
pub fn unrolled_step<O: Objective>(
    obj: &O,
    w: &ParameterSet,
    a_batch: &[f64],
    batch: &[&O::Example],
    xi: f64,
) -> Result<ParameterSet> {
    let (_, grad) = obj.weighted_grad(w, batch, a_batch)?;
    let mut out = w.clone();
    out.axpy(-xi, &grad)?;
    Ok(out)
}

fn sum_losses<O: Objective>(obj: &O, w: &ParameterSet, batch: &[&O::Example]) -> Result<f64> {
    Ok(obj.losses(w, batch)?.sum())
}

/// Finite-difference hypergradient with the intermediate quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct FdHypergradient {
    /// `∂L_val/∂a_b` for each example of the training batch.
    pub grad: Vec<f64>,
    /// `Σ_val L(W')`
    pub val_loss: f64,
    /// Radius actually used for `W± = W ± ε ∇_{W'} L_val(W')`.
    pub eps: f64,
    /// `‖∇_{W'} L_val(W')‖`
    pub val_grad_norm: f64,
}

fn finite(step: &'static str, ok: bool) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Numeric { step, detail: "NaN or infinity encountered".into() })
    }
}

/// `∂L_val/∂a_b ≈ −ξ (L_b(W⁺) − L_b(W⁻)) / 2ε` with
/// `W± = W ± ε ∇_{W'} L_val(W')` and `W'` the unrolled weights. `L_val` and
/// the training loss are sums over their batches.
pub fn hypergrad_fd<O: Objective>(
    obj: &O,
    w: &ParameterSet,
    a_batch: &[f64],
    train: &[&O::Example],
    val: &[&O::Example],
    xi: f64,
    eps: f64,
) -> Result<Vec<f64>> {
    Ok(hypergrad_fd_detailed(obj, w, a_batch, train, val, xi, eps, EpsScaling::Fixed)?.grad)
}

#[allow(clippy::too_many_arguments)]
pub fn hypergrad_fd_detailed<O: Objective>(
    obj: &O,
    w: &ParameterSet,
    a_batch: &[f64],
    train: &[&O::Example],
    val: &[&O::Example],
    xi: f64,
    eps: f64,
    scaling: EpsScaling,
) -> Result<FdHypergradient> {
    if !(eps > 0.0) {
        return Err(Error::Config(format!("eps must be positive, got {eps}")));
    }
    let unrolled = unrolled_step(obj, w, a_batch, train, xi)?;
    finite("unrolled_step", unrolled.is_finite())?;
    let ones = alloc::vec![1.0; val.len()];
    let (val_losses, val_grad) = obj.weighted_grad(&unrolled, val, &ones)?;
    let val_loss = val_losses.sum();
    finite("validation_gradient", val_grad.is_finite() && val_loss.is_finite())?;
    let norm = val_grad.norm();
    let radius = match scaling {
        EpsScaling::GradNorm => eps / (1.0 + norm),
        EpsScaling::Fixed => eps,
    };
    let mut plus = w.clone();
    plus.axpy(radius, &val_grad)?;
    let mut minus = w.clone();
    minus.axpy(-radius, &val_grad)?;
    // ∇_a L_train(W±, a) is the per-example loss vector at W±
    let ids: Vec<usize> = (0..train.len()).collect();
    let (_, at_plus) = weighted_train_loss_grad(a_batch, &ids, obj.losses(&plus, train)?.as_slice())?;
    let (_, at_minus) = weighted_train_loss_grad(a_batch, &ids, obj.losses(&minus, train)?.as_slice())?;
    let grad: Vec<f64> = at_plus
        .iter()
        .zip(&at_minus)
        .map(|(p, m)| -xi * (p - m) / (2.0 * radius))
        .collect();
    finite("finite_difference", grad.iter().all(|g| g.is_finite()))?;
    Ok(FdHypergradient { grad, val_loss, eps: radius, val_grad_norm: norm })
}

/// Oracle: central differences on each `a_b` (step [`EXACT_STEP`]) of
/// `L_val(W − ξ ∇_W Σ a L_train(W))`, re-running the unroll every time.
/// Costs two unrolls per training example.
pub fn hypergrad_exact<O: Objective>(
    obj: &O,
    w: &ParameterSet,
    a_batch: &[f64],
    train: &[&O::Example],
    val: &[&O::Example],
    xi: f64,
) -> Result<Vec<f64>> {
    let objective = |a: &[f64]| -> Result<f64> {
        let unrolled = unrolled_step(obj, w, a, train, xi)?;
        sum_losses(obj, &unrolled, val)
    };
    let mut probe = a_batch.to_vec();
    let mut out = Vec::with_capacity(a_batch.len());
    for i in 0..a_batch.len() {
        probe[i] = a_batch[i] + EXACT_STEP;
        let up = objective(&probe)?;
        probe[i] = a_batch[i] - EXACT_STEP;
        let down = objective(&probe)?;
        probe[i] = a_batch[i];
        out.push((up - down) / (2.0 * EXACT_STEP));
    }
    Ok(out)
}

/// Side-by-side comparison of [`hypergrad_fd`] against [`hypergrad_exact`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypergradientReport {
    pub fd: Vec<f64>,
    pub exact: Vec<f64>,
    /// Components with `|exact|` at or below this are left out of the relative statistics.
    pub rel_floor: f64,
    pub max_abs_dev: f64,
    pub mean_abs_dev: f64,
    pub max_rel_dev: f64,
    pub mean_rel_dev: f64,
}

impl HypergradientReport {
    pub fn new(fd: Vec<f64>, exact: Vec<f64>, rel_floor: f64) -> Result<Self> {
        if fd.len() != exact.len() {
            return Err(Error::shape("HypergradientReport", format!("{} vs {}", fd.len(), exact.len())));
        }
        let abs: Vec<f64> = fd.iter().zip(&exact).map(|(a, b)| (a - b).abs()).collect();
        let rel: Vec<f64> = fd
            .iter()
            .zip(&exact)
            .filter(|(_, e)| e.abs() > rel_floor)
            .map(|(f, e)| (f - e).abs() / e.abs())
            .collect();
        let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
        let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
        Ok(HypergradientReport {
            max_abs_dev: max(&abs),
            mean_abs_dev: mean(&abs),
            max_rel_dev: max(&rel),
            mean_rel_dev: mean(&rel),
            fd,
            exact,
            rel_floor,
        })
    }

    /// Merges several reports into one over the concatenated components.
    pub fn concat(reports: &[HypergradientReport], rel_floor: f64) -> Result<Self> {
        let fd = reports.iter().flat_map(|r| r.fd.iter().copied()).collect();
        let exact = reports.iter().flat_map(|r| r.exact.iter().copied()).collect();
        HypergradientReport::new(fd, exact, rel_floor)
    }
}
