use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use super::hypergrad::hypergrad_fd_detailed;
use super::{IgnoringNetwork, IgnoringState, LbiConfig};
use crate::diffcore::{AdamState, ParameterSet};
use crate::models::Objective;
use crate::rng;
use crate::{Error, Result};

/// State of one run at the end of an epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochSnapshot {
    pub epoch: usize,
    /// `a_i` for every training example, in training-set order.
    pub a: Vec<f64>,
    /// Unweighted per-example training losses.
    pub losses: Vec<f64>,
    /// Mean of `a_i · L_i` over the training set.
    pub train_loss: f64,
    /// Mean validation loss.
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbiOutcome {
    pub weights: ParameterSet,
    pub state: IgnoringState,
    pub trace: Vec<EpochSnapshot>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkOutcome {
    pub weights: ParameterSet,
    pub network: IgnoringNetwork,
    pub trace: Vec<EpochSnapshot>,
}

enum Weighting<'a> {
    Off { n: usize },
    Free(IgnoringState),
    Net { net: IgnoringNetwork, opt: AdamState, features: &'a [Vec<f64>] },
}

impl Weighting<'_> {
    fn a(&self, idx: &[usize]) -> Result<Vec<f64>> {
        match self {
            Weighting::Off { .. } => Ok(vec![1.0; idx.len()]),
            Weighting::Free(s) => Ok(idx.iter().map(|&i| s.a(i)).collect()),
            Weighting::Net { net, features, .. } => {
                let f: Vec<&[f64]> = idx.iter().map(|&i| features[i].as_slice()).collect();
                net.forward(&f)
            }
        }
    }

    fn all(&self) -> Result<Vec<f64>> {
        let n = match self {
            Weighting::Off { n } => *n,
            Weighting::Free(s) => s.len(),
            Weighting::Net { features, .. } => features.len(),
        };
        self.a(&(0..n).collect::<Vec<_>>())
    }

    fn descend(&mut self, idx: &[usize], grad_a: &[f64]) -> Result<()> {
        match self {
            Weighting::Off { .. } => Ok(()),
            Weighting::Free(s) => s.update(idx, grad_a),
            Weighting::Net { net, opt, features } => {
                let f: Vec<&[f64]> = idx.iter().map(|&i| features[i].as_slice()).collect();
                let g = net.backward(&f, grad_a)?;
                opt.step(&mut net.params, &g)
            }
        }
    }
}

fn run<'a, O: Objective>(
    obj: &O,
    init: ParameterSet,
    train: &[&O::Example],
    val: &[&O::Example],
    cfg: &LbiConfig,
    mut weighting: Weighting<'a>,
) -> Result<(ParameterSet, Weighting<'a>, Vec<EpochSnapshot>)> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Data("empty training set".into()));
    }
    let learn_a = !matches!(weighting, Weighting::Off { .. });
    if learn_a && val.is_empty() {
        return Err(Error::Data("learning ignoring variables needs a validation set".into()));
    }
    let mut w = init;
    let mut w_opt = AdamState::new(cfg.weights_opt, &w)?;
    let mut rng = rng::seeded(cfg.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    let xi = cfg.xi();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.train_batch) {
            let batch: Vec<&O::Example> = chunk.iter().map(|&i| train[i]).collect();
            if learn_a {
                let val_batch: Vec<&O::Example> = if cfg.val_batch >= val.len() {
                    val.to_vec()
                } else {
                    index::sample(&mut rng, val.len(), cfg.val_batch).into_iter().map(|i| val[i]).collect()
                };
                let a = weighting.a(chunk)?;
                let hg = hypergrad_fd_detailed(obj, &w, &a, &batch, &val_batch, xi, cfg.eps, cfg.eps_scaling)
                    .map_err(|e| match e {
                        Error::Numeric { step, detail } => Error::Run { epoch, detail: format!("{step}: {detail}") },
                        other => other,
                    })?;
                weighting.descend(chunk, &hg.grad)?;
            }
            let a = weighting.a(chunk)?;
            let (losses, grad) = obj.weighted_grad(&w, &batch, &a)?;
            if !losses.sum().is_finite() || !grad.is_finite() {
                return Err(Error::Run { epoch, detail: "training loss diverged".into() });
            }
            w_opt.step(&mut w, &grad)?;
        }
        if let Weighting::Free(s) = &mut weighting {
            s.epoch = epoch + 1;
        }

        let a = weighting.all()?;
        let losses = obj.losses(&w, train)?.into_vec();
        let train_loss = a.iter().zip(&losses).map(|(a, l)| a * l).sum::<f64>() / train.len() as f64;
        let val_loss = if val.is_empty() { 0.0 } else { obj.losses(&w, val)?.mean() };
        if !train_loss.is_finite() || !val_loss.is_finite() {
            return Err(Error::Run { epoch, detail: "loss is not finite".into() });
        }
        trace.push(EpochSnapshot { epoch, a, losses, train_loss, val_loss });
    }
    Ok((w, weighting, trace))
}

/// Alternating optimization of ignoring variables and model weights.
///
/// Each epoch visits the training set in a fresh random order, one batch at a
/// time. Per batch, with ignoring enabled:
///
/// 1. a validation batch is drawn, the finite-difference hypergradient of the
///    batch's `a_i` is computed and chained through the sigmoid, and the
///    logits of the batch (only) take an Adam step;
/// 2. the weights take an Adam step on `Σ a_i L_i` over the batch.
///
/// With `cfg.ignoring == false` step 1 is skipped and every `a_i` is fixed
/// at 1, which is ordinary training; the returned state then keeps its
/// initial logits.
pub fn lbi_train<O: Objective>(
    obj: &O,
    init: ParameterSet,
    train: &[&O::Example],
    val: &[&O::Example],
    cfg: &LbiConfig,
) -> Result<LbiOutcome> {
    let state = IgnoringState::new(train.len(), cfg.ignoring_opt)?;
    let weighting = if cfg.ignoring { Weighting::Free(state) } else { Weighting::Off { n: train.len() } };
    let (weights, weighting, trace) = run(obj, init, train, val, cfg, weighting)?;
    let state = match weighting {
        Weighting::Free(s) => s,
        _ => {
            let mut s = IgnoringState::new(train.len(), cfg.ignoring_opt)?;
            s.epoch = cfg.epochs;
            s
        }
    };
    Ok(LbiOutcome { weights, state, trace })
}

/// [`lbi_train`] with the ignoring variables produced by `network` from
/// per-example `features` instead of one free variable per example.
pub fn train_with_network<O: Objective>(
    obj: &O,
    init: ParameterSet,
    train: &[&O::Example],
    val: &[&O::Example],
    features: &[Vec<f64>],
    network: IgnoringNetwork,
    cfg: &LbiConfig,
) -> Result<NetworkOutcome> {
    if features.len() != train.len() {
        return Err(Error::Data(format!("{} feature rows for {} training examples", features.len(), train.len())));
    }
    let opt = AdamState::new(cfg.ignoring_opt, &network.params)?;
    let (weights, weighting, trace) = run(obj, init, train, val, cfg, Weighting::Net { net: network, opt, features })?;
    let Weighting::Net { net, .. } = weighting else { unreachable!() };
    Ok(NetworkOutcome { weights, network: net, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffcore::AdamConfig;
    use crate::models::{ClassExample, MlpClassifier, MlpDims};

    fn blobs(n: usize, seed: u64, flip: &[usize]) -> Vec<ClassExample> {
        let mut r = rng::seeded(seed);
        (0..n)
            .map(|i| {
                let label = i % 2;
                let center = if label == 0 { -1.0 } else { 1.0 };
                let features = (0..2).map(|_| center + 0.5 * rng::normal(&mut r)).collect();
                let label = if flip.contains(&i) { 1 - label } else { label };
                ClassExample { features, label }
            })
            .collect()
    }

    fn cfg() -> LbiConfig {
        LbiConfig {
            epochs: 5,
            train_batch: 8,
            val_batch: 8,
            weights_opt: AdamConfig { lr: 0.01, ..AdamConfig::default() },
            ..LbiConfig::default()
        }
    }

    #[test]
    fn frozen_ignoring_optimizer_keeps_a_at_half() {
        let dims = MlpDims { input: 2, hidden: 4, classes: 2 };
        let train = blobs(20, 1, &[]);
        let val = blobs(10, 2, &[]);
        let (tr, va): (Vec<_>, Vec<_>) = (train.iter().collect(), val.iter().collect());
        let mut c = cfg();
        c.ignoring_opt.lr = 0.0;
        let out = lbi_train(&dims, MlpClassifier::new(dims, 0).unwrap().params, &tr, &va, &c).unwrap();
        for snap in &out.trace {
            assert!(snap.a.iter().all(|&a| a == 0.5));
        }
        assert_eq!(out.state.epoch, 5);
    }

    #[test]
    fn a_stays_strictly_inside_unit_interval() {
        let dims = MlpDims { input: 2, hidden: 4, classes: 2 };
        let train = blobs(24, 3, &[0, 5, 9]);
        let val = blobs(12, 4, &[]);
        let (tr, va): (Vec<_>, Vec<_>) = (train.iter().collect(), val.iter().collect());
        let mut c = cfg();
        c.ignoring_opt.lr = 0.5;
        c.epochs = 30;
        let out = lbi_train(&dims, MlpClassifier::new(dims, 0).unwrap().params, &tr, &va, &c).unwrap();
        for snap in &out.trace {
            assert!(snap.a.iter().all(|&a| a > 0.0 && a < 1.0));
        }
    }

    #[test]
    fn full_batch_runs_are_permutation_equivariant() {
        let dims = MlpDims { input: 2, hidden: 3, classes: 2 };
        let train = blobs(12, 5, &[2, 7]);
        let val = blobs(6, 6, &[]);
        let perm: Vec<usize> = {
            let mut p: Vec<usize> = (0..12).collect();
            p.shuffle(&mut rng::seeded(9));
            p
        };
        let permuted: Vec<ClassExample> = perm.iter().map(|&i| train[i].clone()).collect();
        let mut c = cfg();
        c.train_batch = 100;
        c.val_batch = 100;
        c.epochs = 10;
        c.ignoring_opt.lr = 0.1;
        let init = MlpClassifier::new(dims, 2).unwrap().params;
        let va: Vec<_> = val.iter().collect();
        let a = lbi_train(&dims, init.clone(), &train.iter().collect::<Vec<_>>(), &va, &c).unwrap();
        let b = lbi_train(&dims, init, &permuted.iter().collect::<Vec<_>>(), &va, &c).unwrap();
        let (wa, wb) = (a.state.weights(), b.state.weights());
        for (k, &i) in perm.iter().enumerate() {
            assert!((wb[k] - wa[i]).abs() < 1e-9, "{} vs {}", wb[k], wa[i]);
        }
    }

    #[test]
    fn ignoring_off_is_plain_training() {
        let dims = MlpDims { input: 2, hidden: 3, classes: 2 };
        let train = blobs(16, 7, &[]);
        let tr: Vec<_> = train.iter().collect();
        let mut c = cfg();
        c.ignoring = false;
        let out = lbi_train(&dims, MlpClassifier::new(dims, 1).unwrap().params, &tr, &[], &c).unwrap();
        assert!(out.trace.last().unwrap().val_loss == 0.0);
        assert!(out.trace.last().unwrap().train_loss < out.trace[0].train_loss * 1.5);
    }

    #[test]
    fn divergence_is_reported_with_epoch() {
        let dims = MlpDims { input: 2, hidden: 3, classes: 2 };
        let mut train = blobs(8, 7, &[]);
        train[3].features[0] = f64::NAN;
        let tr: Vec<_> = train.iter().collect();
        let mut c = cfg();
        c.ignoring = false;
        let err = lbi_train(&dims, MlpClassifier::new(dims, 1).unwrap().params, &tr, &[], &c).unwrap_err();
        assert!(matches!(err, Error::Run { epoch: 0, .. }));
    }

    #[test]
    fn network_weighting_trains_and_stays_in_range() {
        let dims = MlpDims { input: 2, hidden: 3, classes: 2 };
        let train = blobs(16, 8, &[1]);
        let val = blobs(8, 9, &[]);
        let feats: Vec<Vec<f64>> = train.iter().map(|e| e.features.clone()).collect();
        let (tr, va): (Vec<_>, Vec<_>) = (train.iter().collect(), val.iter().collect());
        let net = IgnoringNetwork::new(2, 4, 3).unwrap();
        let before = net.clone();
        let mut c = cfg();
        c.ignoring_opt.lr = 0.05;
        let out = train_with_network(&dims, MlpClassifier::new(dims, 1).unwrap().params, &tr, &va, &feats, net, &c).unwrap();
        assert_ne!(out.network, before);
        assert!(out.trace.iter().all(|s| s.a.iter().all(|&a| a > 0.0 && a < 1.0)));
    }
}
