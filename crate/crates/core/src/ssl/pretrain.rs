use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::pairs::{sample_pairs, MatchPair, PairBatch, PairMode};
use crate::data::EncodedExample;
use crate::diffcore::{AdamConfig, AdamState, ParameterSet};
use crate::models::{match_forward_loss, vqa_forward_loss, Objective, TwoTowerModel};
use crate::rng;
use crate::{Error, Result};

/// Task weights of the joint pretraining loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointWeights {
    pub iq: f64,
    pub ia: f64,
    pub qa: f64,
}

impl Default for JointWeights {
    fn default() -> Self {
        JointWeights { iq: 1.0, ia: 1.0, qa: 1.0 }
    }
}

impl JointWeights {
    /// All three weights zero: pretraining is switched off.
    pub fn is_disabled(&self) -> bool {
        self.iq == 0.0 && self.ia == 0.0 && self.qa == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        let ws = [self.iq, self.ia, self.qa];
        if ws.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Config(format!("joint weights must be non-negative, got {ws:?}")));
        }
        if self.is_disabled() {
            return Err(Error::Config("at least one joint weight must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PretrainConfig {
    pub weights: JointWeights,
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: AdamConfig,
    /// Negatives per positive in both matching tasks.
    pub negative_ratio: f64,
    pub seed: u64,
    /// Sample negative pairs once instead of every epoch.
    pub freeze_negatives: bool,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        PretrainConfig {
            weights: JointWeights::default(),
            epochs: 30,
            batch_size: 256,
            optimizer: AdamConfig::default(),
            negative_ratio: 1.0,
            seed: 0,
            freeze_negatives: false,
        }
    }
}

impl PretrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        self.optimizer.validate()?;
        if self.batch_size == 0 {
            return Err(Error::Config("pretraining batch size must be positive".into()));
        }
        if !(self.negative_ratio > 0.0) {
            return Err(Error::Config(format!("negative ratio must be positive, got {}", self.negative_ratio)));
        }
        Ok(())
    }
}

/// Answer prediction from the question alone.
pub fn ssl_qa_loss(model: &TwoTowerModel, batch: &[&EncodedExample]) -> Result<crate::models::PerExampleLoss> {
    vqa_forward_loss(model, batch, false)
}

/// `λ_IQ·mean(IQ) + λ_IA·mean(IA) + λ_QA·mean(QA)`; a term with weight 0 is
/// not evaluated, so its batch may be empty.
pub fn joint_pretrain_loss(
    model: &TwoTowerModel,
    iq: &PairBatch,
    ia: &PairBatch,
    qa: &[&EncodedExample],
    weights: &JointWeights,
) -> Result<f64> {
    let mut total = 0.0;
    if weights.iq != 0.0 {
        total += weights.iq * match_forward_loss(model, iq)?.mean();
    }
    if weights.ia != 0.0 {
        total += weights.ia * match_forward_loss(model, ia)?.mean();
    }
    if weights.qa != 0.0 {
        total += weights.qa * ssl_qa_loss(model, qa)?.mean();
    }
    Ok(total)
}

/// Per-epoch losses on fixed evaluation pairs. Row 0 is measured before the
/// first update. A task without data has no value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub epoch: usize,
    pub loss_iq: Option<f64>,
    pub loss_ia: Option<f64>,
    pub loss_qa: Option<f64>,
    pub loss_joint: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PretrainOutcome {
    pub model: TwoTowerModel,
    pub curves: Vec<CurvePoint>,
}

/// Examples available to pretraining. Image/question matching needs no
/// answers and uses both sets; the two answer-based tasks see only `labeled`.
#[derive(Debug, Clone, Copy)]
pub struct PretrainData<'a> {
    pub unlabeled: &'a [&'a EncodedExample],
    pub labeled: &'a [&'a EncodedExample],
}

impl<'a> PretrainData<'a> {
    /// Every example is labeled.
    pub fn labeled(examples: &'a [&'a EncodedExample]) -> Self {
        PretrainData { unlabeled: &[], labeled: examples }
    }

    fn with_questions(&self) -> Vec<&'a EncodedExample> {
        self.labeled.iter().chain(self.unlabeled).copied().collect()
    }
}

struct Tasks<'a> {
    iq: Vec<MatchPair>,
    ia: Vec<MatchPair>,
    qa: Vec<&'a EncodedExample>,
}

fn sample_tasks<'a>(
    questions: &[&'a EncodedExample],
    labeled: &[&'a EncodedExample],
    cfg: &PretrainConfig,
    seed: u64,
) -> Result<Tasks<'a>> {
    let w = &cfg.weights;
    let pairs = |src: &[&EncodedExample], mode, stream, on: bool| -> Result<Vec<MatchPair>> {
        if !on || src.len() < 2 {
            return Ok(Vec::new());
        }
        Ok(sample_pairs(src, mode, cfg.negative_ratio, rng::derive(seed, stream))?.pairs)
    };
    Ok(Tasks {
        iq: pairs(questions, PairMode::ImageQuestion, 1, w.iq > 0.0 || seed == EVAL_STREAM)?,
        ia: pairs(labeled, PairMode::ImageAnswer, 2, w.ia > 0.0 || seed == EVAL_STREAM)?,
        qa: labeled.to_vec(),
    })
}

const EVAL_STREAM: u64 = u64::MAX;

fn curve_point(model: &TwoTowerModel, epoch: usize, eval: &Tasks<'_>, w: &JointWeights) -> Result<CurvePoint> {
    let loss = |pairs: &[MatchPair]| -> Result<Option<f64>> {
        if pairs.is_empty() {
            return Ok(None);
        }
        let refs: Vec<&MatchPair> = pairs.iter().collect();
        Ok(Some(model.match_objective().losses(&model.params, &refs)?.mean()))
    };
    let loss_iq = loss(&eval.iq)?;
    let loss_ia = loss(&eval.ia)?;
    let loss_qa = if eval.qa.is_empty() { None } else { Some(ssl_qa_loss(model, &eval.qa)?.mean()) };
    let loss_joint = w.iq * loss_iq.unwrap_or(0.0) + w.ia * loss_ia.unwrap_or(0.0) + w.qa * loss_qa.unwrap_or(0.0);
    for (name, v) in [("iq", loss_iq), ("ia", loss_ia), ("qa", loss_qa), ("joint", Some(loss_joint))] {
        if let Some(v) = v {
            if !v.is_finite() {
                return Err(Error::Run { epoch, detail: format!("{name} pretraining loss is not finite") });
            }
        }
    }
    Ok(CurvePoint { epoch, loss_iq, loss_ia, loss_qa, loss_joint })
}

/// `batch` consecutive items of `order` starting at `step · batch`, wrapping.
fn window<T: Copy>(order: &[T], step: usize, batch: usize) -> Vec<T> {
    let start = step * batch;
    (0..batch.min(order.len())).map(|k| order[(start + k) % order.len()]).collect()
}

/// Joint multi-task pretraining with Adam.
///
/// Each step draws one batch per active task, each task cycling through its
/// own shuffled order, and descends the λ-weighted sum of the three batch
/// means. An epoch is as many steps as the largest active task needs to be
/// visited once. Negative pairs are redrawn every epoch unless
/// `freeze_negatives` is set.
pub fn pretrain(model: &TwoTowerModel, data: PretrainData<'_>, cfg: &PretrainConfig) -> Result<PretrainOutcome> {
    cfg.validate()?;
    let w = cfg.weights;
    let questions = data.with_questions();
    if w.iq > 0.0 && questions.len() < 2 {
        return Err(Error::Data(format!("image/question matching needs at least 2 examples, got {}", questions.len())));
    }
    if (w.ia > 0.0 && data.labeled.len() < 2) || (w.qa > 0.0 && data.labeled.is_empty()) {
        return Err(Error::Data(format!("answer-based pretraining tasks got {} labeled examples", data.labeled.len())));
    }

    let mut out = model.clone();
    let eval = sample_tasks(&questions, data.labeled, cfg, EVAL_STREAM)?;
    let mut curves = Vec::with_capacity(cfg.epochs + 1);
    curves.push(curve_point(&out, 0, &eval, &w)?);

    let mut opt = AdamState::new(cfg.optimizer, &out.params)?;
    let mut rng = rng::seeded(cfg.seed);
    let match_obj = out.match_objective();
    let qa_obj = out.answer_objective(false);
    let mut tasks = sample_tasks(&questions, data.labeled, cfg, rng::derive(cfg.seed, 0))?;

    for epoch in 1..=cfg.epochs {
        if epoch > 1 && !cfg.freeze_negatives {
            tasks = sample_tasks(&questions, data.labeled, cfg, rng::derive(cfg.seed, epoch as u64))?;
        }
        let mut iq_order: Vec<usize> = (0..tasks.iq.len()).collect();
        let mut ia_order: Vec<usize> = (0..tasks.ia.len()).collect();
        let mut qa_order: Vec<usize> = if w.qa > 0.0 { (0..tasks.qa.len()).collect() } else { Vec::new() };
        iq_order.shuffle(&mut rng);
        ia_order.shuffle(&mut rng);
        qa_order.shuffle(&mut rng);
        let longest = iq_order.len().max(ia_order.len()).max(qa_order.len());
        let steps = longest.div_ceil(cfg.batch_size);

        for step in 0..steps {
            let mut grad: Option<ParameterSet> = None;
            let mut add = |g: ParameterSet| -> Result<()> {
                match grad.as_mut() {
                    Some(acc) => acc.axpy(1.0, &g),
                    None => {
                        grad = Some(g);
                        Ok(())
                    }
                }
            };
            for (lambda, pairs, order) in [(w.iq, &tasks.iq, &iq_order), (w.ia, &tasks.ia, &ia_order)] {
                if lambda > 0.0 {
                    let batch: Vec<&MatchPair> = window(order, step, cfg.batch_size).iter().map(|&i| &pairs[i]).collect();
                    let weights = alloc::vec![lambda / batch.len() as f64; batch.len()];
                    add(match_obj.weighted_grad(&out.params, &batch, &weights)?.1)?;
                }
            }
            if w.qa > 0.0 {
                let batch: Vec<&EncodedExample> = window(&qa_order, step, cfg.batch_size).iter().map(|&i| tasks.qa[i]).collect();
                let weights = alloc::vec![w.qa / batch.len() as f64; batch.len()];
                add(qa_obj.weighted_grad(&out.params, &batch, &weights)?.1)?;
            }
            let grad = grad.expect("validated weights leave one task active");
            if !grad.is_finite() {
                return Err(Error::Run { epoch, detail: String::from("pretraining gradient is not finite") });
            }
            opt.step(&mut out.params, &grad)?;
        }
        curves.push(curve_point(&out, epoch, &eval, &w)?);
    }
    if cfg.epochs > 0 {
        out.lineage.push(format!(
            "pretrain:seed={},epochs={},weights=({},{},{})",
            cfg.seed, cfg.epochs, w.iq, w.ia, w.qa
        ));
    }
    Ok(PretrainOutcome { model: out, curves })
}
