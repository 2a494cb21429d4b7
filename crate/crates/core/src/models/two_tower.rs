//! Two-tower VQA model.
//!
//! ```text
//! image  ──linear──────────────────────┐
//!                                      ├─ concat ─ linear ─ tanh ─┬─ answer head (softmax over C)
//! tokens ── embed ─ mean ─ linear ─────┘                          └─ match head (sigmoid)
//! ```
//!
//! The image tower and the question tower are the encoders; the fusion layer
//! and both heads are task-specific. Answers are encoded with the question
//! tower when matching images against answers.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::init::{init_params, LayerShape};
use super::{check_weights, Objective, PerExampleLoss};
use crate::data::EncodedExample;
use crate::diffcore::layers::{self, linear};
use crate::diffcore::{binary_cross_entropy_with_logits, cross_entropy_with_softmax, ParameterSet, Tensor};
use crate::ssl::{MatchPair, PairBatch};
use crate::{Error, Result};

/// Parameters that make up the two encoders.
pub const ENCODER_PARAMS: [&str; 5] = ["img.w", "img.b", "emb", "q.w", "q.b"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoTowerDims {
    pub image_dim: usize,
    pub vocab: usize,
    pub embed: usize,
    pub hidden: usize,
    pub classes: usize,
}

impl TwoTowerDims {
    pub fn layout(&self) -> [(&'static str, LayerShape); 11] {
        let e = self.embed;
        [
            ("img.w", LayerShape::Weight { out: e, inp: self.image_dim }),
            ("img.b", LayerShape::Bias(e)),
            ("emb", LayerShape::Weight { out: self.vocab, inp: e }),
            ("q.w", LayerShape::Weight { out: e, inp: e }),
            ("q.b", LayerShape::Bias(e)),
            ("fuse.w", LayerShape::Weight { out: self.hidden, inp: 2 * e }),
            ("fuse.b", LayerShape::Bias(self.hidden)),
            ("ans.w", LayerShape::Weight { out: self.classes, inp: self.hidden }),
            ("ans.b", LayerShape::Bias(self.classes)),
            ("match.w", LayerShape::Weight { out: 1, inp: self.hidden }),
            ("match.b", LayerShape::Bias(1)),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if [self.image_dim, self.vocab, self.embed, self.hidden, self.classes].contains(&0) {
            return Err(Error::Config(format!("two-tower dimensions must be positive: {self:?}")));
        }
        Ok(())
    }

    pub fn init(&self, seed: u64) -> Result<ParameterSet> {
        self.validate()?;
        init_params(&self.layout(), seed)
    }

    fn images(&self, rows: &[&[f64]]) -> Result<Tensor> {
        let mut data = Vec::with_capacity(rows.len() * self.image_dim);
        for r in rows {
            if r.len() != self.image_dim {
                return Err(Error::shape("two_tower", format!("image of length {} for dim {}", r.len(), self.image_dim)));
            }
            data.extend_from_slice(r);
        }
        Tensor::matrix(rows.len(), self.image_dim, data)
    }

    fn encode(&self, p: &ParameterSet, images: &[&[f64]], texts: &[&[u32]], use_image: bool) -> Result<Fused> {
        let x = self.images(images)?;
        let img = if use_image {
            linear(&x, p.tensor("img.w")?, p.tensor("img.b")?)?
        } else {
            Tensor::zeros(&[images.len(), self.embed])
        };
        let pooled = layers::mean_pool(p.tensor("emb")?, texts)?;
        let q = linear(&pooled, p.tensor("q.w")?, p.tensor("q.b")?)?;
        let z = img.concat_cols(&q)?;
        let h = linear(&z, p.tensor("fuse.w")?, p.tensor("fuse.b")?)?.tanh();
        Ok(Fused { x, pooled, z, h, use_image })
    }

    /// Backpropagates `dH` through fusion and both towers into `g`.
    fn encode_backward(&self, p: &ParameterSet, f: &Fused, texts: &[&[u32]], dh: &Tensor, g: &mut ParameterSet) -> Result<()> {
        let dpre = layers::tanh_backward(&f.h, dh)?;
        let (dz, dfw, dfb) = layers::linear_backward(&f.z, p.tensor("fuse.w")?, &dpre)?;
        let (dimg, dq) = dz.split_cols(self.embed)?;
        if f.use_image {
            let (dw, db) = layers::linear_backward_params(&f.x, &dimg)?;
            put(g, "img.w", dw)?;
            put(g, "img.b", db)?;
        }
        let (dpooled, dqw, dqb) = layers::linear_backward(&f.pooled, p.tensor("q.w")?, &dq)?;
        put(g, "emb", layers::mean_pool_backward(&[self.vocab, self.embed], texts, &dpooled)?)?;
        put(g, "q.w", dqw)?;
        put(g, "q.b", dqb)?;
        put(g, "fuse.w", dfw)?;
        put(g, "fuse.b", dfb)?;
        Ok(())
    }

    pub fn answer_logits(&self, p: &ParameterSet, batch: &[&EncodedExample], use_image: bool) -> Result<Tensor> {
        let (images, texts) = split_answer_inputs(batch);
        let f = self.encode(p, &images, &texts, use_image)?;
        linear(&f.h, p.tensor("ans.w")?, p.tensor("ans.b")?)
    }

    /// Match-head logits for (image, text) pairs.
    pub fn match_logits(&self, p: &ParameterSet, images: &[&[f64]], texts: &[&[u32]]) -> Result<Vec<f64>> {
        let f = self.encode(p, images, texts, true)?;
        Ok(linear(&f.h, p.tensor("match.w")?, p.tensor("match.b")?)?.into_data())
    }

    /// Most likely answer class per example.
    pub fn predict(&self, p: &ParameterSet, batch: &[&EncodedExample], use_image: bool) -> Result<Vec<usize>> {
        let logits = self.answer_logits(p, batch, use_image)?;
        Ok((0..logits.rows())
            .map(|i| {
                let row = logits.row(i);
                (0..row.len()).fold(0, |best, k| if row[k] > row[best] { k } else { best })
            })
            .collect())
    }
}

struct Fused {
    x: Tensor,
    pooled: Tensor,
    z: Tensor,
    h: Tensor,
    use_image: bool,
}

fn put(g: &mut ParameterSet, name: &str, t: Tensor) -> Result<()> {
    *g.get_mut(name).ok_or_else(|| Error::Contract(format!("missing gradient slot `{name}`")))? = t;
    Ok(())
}

fn split_answer_inputs<'a>(batch: &[&'a EncodedExample]) -> (Vec<&'a [f64]>, Vec<&'a [u32]>) {
    batch.iter().map(|e| (e.image.as_slice(), e.question.as_slice())).unzip()
}

fn check_tokens(dims: &TwoTowerDims, tokens: &[u32]) -> Result<()> {
    match tokens.iter().find(|&&t| t as usize >= dims.vocab) {
        Some(t) => Err(Error::Data(format!("unknown token id {t} for vocabulary of {}", dims.vocab))),
        None => Ok(()),
    }
}

/// Answer classification loss. `use_image = false` is the question-only
/// ablation: the image tower's output is replaced by zeros of the same width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnswerObjective {
    pub dims: TwoTowerDims,
    pub use_image: bool,
}

impl AnswerObjective {
    fn labels(&self, batch: &[&EncodedExample]) -> Result<Vec<usize>> {
        batch
            .iter()
            .map(|e| {
                check_tokens(&self.dims, &e.question)?;
                if e.answer_class >= self.dims.classes {
                    return Err(Error::Data(format!(
                        "answer class {} out of range for {} classes",
                        e.answer_class, self.dims.classes
                    )));
                }
                Ok(e.answer_class)
            })
            .collect()
    }
}

impl Objective for AnswerObjective {
    type Example = EncodedExample;

    fn losses(&self, p: &ParameterSet, batch: &[&EncodedExample]) -> Result<PerExampleLoss> {
        let labels = self.labels(batch)?;
        let logits = self.dims.answer_logits(p, batch, self.use_image)?;
        Ok(PerExampleLoss(cross_entropy_with_softmax(&logits, &labels)?))
    }

    fn weighted_grad(
        &self,
        p: &ParameterSet,
        batch: &[&EncodedExample],
        weights: &[f64],
    ) -> Result<(PerExampleLoss, ParameterSet)> {
        check_weights(batch.len(), weights)?;
        let labels = self.labels(batch)?;
        let (images, texts) = split_answer_inputs(batch);
        let f = self.dims.encode(p, &images, &texts, self.use_image)?;
        let logits = linear(&f.h, p.tensor("ans.w")?, p.tensor("ans.b")?)?;
        let losses = cross_entropy_with_softmax(&logits, &labels)?;
        let dlogits = layers::softmax_cross_entropy_backward(&logits, &labels, weights)?;
        let (dh, daw, dab) = layers::linear_backward(&f.h, p.tensor("ans.w")?, &dlogits)?;
        let mut g = p.zeros_like();
        put(&mut g, "ans.w", daw)?;
        put(&mut g, "ans.b", dab)?;
        self.dims.encode_backward(p, &f, &texts, &dh, &mut g)?;
        Ok((PerExampleLoss(losses), g))
    }
}

/// Binary cross-entropy of the match head over (image, text) pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchObjective {
    pub dims: TwoTowerDims,
}

impl MatchObjective {
    fn inputs<'a>(&self, batch: &[&'a MatchPair]) -> Result<(Vec<&'a [f64]>, Vec<&'a [u32]>, Vec<f64>)> {
        let mut images = Vec::with_capacity(batch.len());
        let mut texts = Vec::with_capacity(batch.len());
        let mut labels = Vec::with_capacity(batch.len());
        for pair in batch {
            check_tokens(&self.dims, &pair.text)?;
            if pair.label != 0.0 && pair.label != 1.0 {
                return Err(Error::Data(format!("match label must be 0 or 1, got {}", pair.label)));
            }
            images.push(pair.image.as_slice());
            texts.push(pair.text.as_slice());
            labels.push(pair.label);
        }
        Ok((images, texts, labels))
    }
}

impl Objective for MatchObjective {
    type Example = MatchPair;

    fn losses(&self, p: &ParameterSet, batch: &[&MatchPair]) -> Result<PerExampleLoss> {
        let (images, texts, labels) = self.inputs(batch)?;
        let logits = self.dims.match_logits(p, &images, &texts)?;
        Ok(PerExampleLoss(binary_cross_entropy_with_logits(&logits, &labels)?))
    }

    fn weighted_grad(&self, p: &ParameterSet, batch: &[&MatchPair], weights: &[f64]) -> Result<(PerExampleLoss, ParameterSet)> {
        check_weights(batch.len(), weights)?;
        let (images, texts, labels) = self.inputs(batch)?;
        let f = self.dims.encode(p, &images, &texts, true)?;
        let logits = linear(&f.h, p.tensor("match.w")?, p.tensor("match.b")?)?;
        let losses = binary_cross_entropy_with_logits(logits.data(), &labels)?;
        let dlogits = layers::bce_with_logits_backward(logits.data(), &labels, weights)?;
        let dlogits = Tensor::matrix(batch.len(), 1, dlogits)?;
        let (dh, dmw, dmb) = layers::linear_backward(&f.h, p.tensor("match.w")?, &dlogits)?;
        let mut g = p.zeros_like();
        put(&mut g, "match.w", dmw)?;
        put(&mut g, "match.b", dmb)?;
        self.dims.encode_backward(p, &f, &texts, &dh, &mut g)?;
        Ok((PerExampleLoss(losses), g))
    }
}

/// Architecture, weights and a human-readable record of how the weights came
/// to be (initialization seeds, pretraining, transfer).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoTowerModel {
    pub dims: TwoTowerDims,
    pub params: ParameterSet,
    pub lineage: Vec<String>,
}

impl TwoTowerModel {
    pub fn new(dims: TwoTowerDims, seed: u64) -> Result<Self> {
        Ok(TwoTowerModel { dims, params: dims.init(seed)?, lineage: alloc::vec![format!("init:seed={seed}")] })
    }

    pub fn answer_objective(&self, use_image: bool) -> AnswerObjective {
        AnswerObjective { dims: self.dims, use_image }
    }

    pub fn match_objective(&self) -> MatchObjective {
        MatchObjective { dims: self.dims }
    }
}

pub fn vqa_forward_loss(model: &TwoTowerModel, batch: &[&EncodedExample], use_image: bool) -> Result<PerExampleLoss> {
    model.answer_objective(use_image).losses(&model.params, batch)
}

pub fn match_forward_loss(model: &TwoTowerModel, pairs: &PairBatch) -> Result<PerExampleLoss> {
    let refs: Vec<&MatchPair> = pairs.pairs.iter().collect();
    model.match_objective().losses(&model.params, &refs)
}

/// Copies both encoders from `pretrained` into `fresh`; fusion and heads keep
/// their fresh initialization.
pub fn transfer_encoders(pretrained: &TwoTowerModel, fresh: &TwoTowerModel) -> Result<TwoTowerModel> {
    let (a, b) = (pretrained.dims, fresh.dims);
    if a.image_dim != b.image_dim || a.vocab != b.vocab || a.embed != b.embed {
        return Err(Error::Config(format!(
            "encoder dimensions differ: pretrained (image {}, vocab {}, embed {}) vs fresh (image {}, vocab {}, embed {})",
            a.image_dim, a.vocab, a.embed, b.image_dim, b.vocab, b.embed
        )));
    }
    let mut out = fresh.clone();
    for name in ENCODER_PARAMS {
        *out.params.get_mut(name).expect("fresh model has every encoder slot") = pretrained.params.tensor(name)?.clone();
    }
    out.lineage.push(String::from("transfer-encoders-from:"));
    let last = out.lineage.len() - 1;
    out.lineage[last].push_str(&pretrained.lineage.join("|"));
    Ok(out)
}
