use alloc::format;
use alloc::vec::Vec;

use super::pretrain::{pretrain, CurvePoint, PretrainConfig, PretrainData};
use crate::data::{Codebook, EncodedExample};
use crate::lbi::{apply_removal, lbi_train, EpochSnapshot, LbiConfig};
use crate::metrics::{evaluate, EvalReport};
use crate::models::{transfer_encoders, TwoTowerDims, TwoTowerModel};
use crate::rng;
use crate::{Error, Result};

/// Labeled splits for supervised fine-tuning.
#[derive(Debug, Clone, Copy)]
pub struct FinetuneData<'a> {
    pub train: &'a [&'a EncodedExample],
    pub val: &'a [&'a EncodedExample],
    pub test: &'a [&'a EncodedExample],
}

/// Result of hard removal: examples with `a_i < τ` dropped and the model
/// retrained from the same initialization without ignoring.
#[derive(Debug, Clone, PartialEq)]
pub struct Retrained {
    pub threshold: f64,
    pub removed_ids: Vec<u64>,
    pub model: TwoTowerModel,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FinetuneOutcome {
    /// Model after soft-weighted training.
    pub model: TwoTowerModel,
    pub report: EvalReport,
    pub trace: Vec<EpochSnapshot>,
    /// Present when ignoring is on and a removal threshold is configured.
    pub retrained: Option<Retrained>,
    pub pretrain_curves: Vec<CurvePoint>,
}

pub(crate) fn check_codebook(dims: &TwoTowerDims, codebook: &Codebook) -> Result<()> {
    if dims.vocab != codebook.vocab.len() || dims.classes != codebook.answers.len() {
        return Err(Error::Config(format!(
            "model expects vocabulary {} and {} answers, codebook has {} and {}",
            dims.vocab,
            dims.classes,
            codebook.vocab.len(),
            codebook.answers.len()
        )));
    }
    Ok(())
}

/// Answer-classification training of `init` (with or without ignoring, per
/// `cfg.ignoring`), then test metrics.
pub fn finetune(init: &TwoTowerModel, data: FinetuneData<'_>, cfg: &LbiConfig, codebook: &Codebook) -> Result<FinetuneOutcome> {
    check_codebook(&init.dims, codebook)?;
    let obj = init.answer_objective(true);
    let out = lbi_train(&obj, init.params.clone(), data.train, data.val, cfg)?;
    let mut model = init.clone();
    model.params = out.weights;
    model.lineage.push(format!("finetune:seed={},ignoring={},epochs={}", cfg.seed, cfg.ignoring, cfg.epochs));
    let report = evaluate(&model, data.test, codebook)?;

    let retrained = match cfg.removal_threshold {
        Some(tau) if cfg.ignoring => {
            let (kept, removed) = apply_removal(data.train, &out.state, tau)?;
            let plain = LbiConfig { ignoring: false, ..cfg.clone() };
            let again = lbi_train(&obj, init.params.clone(), &kept, data.val, &plain)?;
            let mut m = init.clone();
            m.params = again.weights;
            m.lineage.push(format!("retrain-after-removal:tau={tau},removed={}", removed.len()));
            let report = evaluate(&m, data.test, codebook)?;
            Some(Retrained { threshold: tau, removed_ids: removed.iter().map(|&i| data.train[i].id).collect(), model: m, report })
        }
        _ => None,
    };
    Ok(FinetuneOutcome { model, report, trace: out.trace, retrained, pretrain_curves: Vec::new() })
}

/// Pretrains a model seeded from `model_seed`, transfers its encoders into a
/// fresh model with the same seed, then fine-tunes. All-zero joint weights
/// skip pretraining, which is training from scratch.
pub fn pretrain_then_finetune(
    dims: TwoTowerDims,
    model_seed: u64,
    pretrain_data: PretrainData<'_>,
    finetune_data: FinetuneData<'_>,
    pretrain_cfg: &PretrainConfig,
    finetune_cfg: &LbiConfig,
    codebook: &Codebook,
) -> Result<FinetuneOutcome> {
    check_codebook(&dims, codebook)?;
    let fresh = TwoTowerModel::new(dims, model_seed)?;
    if pretrain_cfg.weights.is_disabled() {
        return finetune(&fresh, finetune_data, finetune_cfg, codebook);
    }
    let source = TwoTowerModel::new(dims, rng::derive(model_seed, 1))?;
    let pre = pretrain(&source, pretrain_data, pretrain_cfg)?;
    let init = transfer_encoders(&pre.model, &fresh)?;
    let mut out = finetune(&init, finetune_data, finetune_cfg, codebook)?;
    out.pretrain_curves = pre.curves;
    Ok(out)
}
