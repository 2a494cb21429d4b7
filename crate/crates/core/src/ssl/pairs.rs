use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::EncodedExample;
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairMode {
    /// image vs question
    ImageQuestion,
    /// image vs answer, the answer encoded by the question tower
    ImageAnswer,
}

/// An image paired with a token sequence; `label` is 1 when both sides come
/// from the same example.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchPair {
    pub image: Vec<f64>,
    pub text: Vec<u32>,
    pub label: f64,
    pub left_id: u64,
    pub right_id: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PairBatch {
    pub pairs: Vec<MatchPair>,
}

impl PairBatch {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.pairs.iter().filter(|p| p.label == 1.0).count()
    }
}

/// One positive per example and `round(ratio · n)` negatives, each negative
/// pairing an image with the text of a uniformly drawn different example.
/// The result is shuffled.
pub fn sample_pairs(examples: &[&EncodedExample], mode: PairMode, negative_ratio: f64, seed: u64) -> Result<PairBatch> {
    if examples.len() < 2 {
        return Err(Error::Data(format!("pair sampling needs at least 2 examples, got {}", examples.len())));
    }
    if !(negative_ratio > 0.0) {
        return Err(Error::Config(format!("negative ratio must be positive, got {negative_ratio}")));
    }
    let text = |e: &EncodedExample| match mode {
        PairMode::ImageQuestion => e.question.clone(),
        PairMode::ImageAnswer => e.answer_tokens.clone(),
    };
    let n = examples.len();
    let mut rng = rng::seeded(seed);
    let mut pairs = Vec::with_capacity(n + (negative_ratio * n as f64) as usize + 1);
    for e in examples {
        pairs.push(MatchPair { image: e.image.clone(), text: text(e), label: 1.0, left_id: e.id, right_id: e.id });
    }
    let n_neg = libm::round(negative_ratio * n as f64) as usize;
    for _ in 0..n_neg {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        // equal ids at different positions would break the label contract
        if examples[i].id == examples[j].id {
            return Err(Error::Data(format!("duplicate example id {}", examples[i].id)));
        }
        pairs.push(MatchPair {
            image: examples[i].image.clone(),
            text: text(examples[j]),
            label: 0.0,
            left_id: examples[i].id,
            right_id: examples[j].id,
        });
    }
    pairs.shuffle(&mut rng);
    Ok(PairBatch { pairs })
}
