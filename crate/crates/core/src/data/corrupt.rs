use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{QuestionType, VqaExample};
use crate::rng;
use crate::{Error, Result};

/// Two corruption channels on disjoint example subsets: wrong answers and
/// images swapped in from another example.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorruptionSpec {
    pub label_flip_rate: f64,
    pub mismatch_rate: f64,
    pub seed: u64,
}

impl CorruptionSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = |r: f64| (0.0..=1.0).contains(&r);
        if !ok(self.label_flip_rate) || !ok(self.mismatch_rate) || self.label_flip_rate + self.mismatch_rate > 1.0 {
            return Err(Error::Config("corruption rates must lie in [0, 1] and sum to at most 1".into()));
        }
        Ok(())
    }
}

/// Corrupts `⌊flip·n⌋` answers and `⌊mismatch·n⌋` images, chosen without
/// replacement. Flipped answers are drawn from the other answers seen for
/// the same question type (any other answer if the type has only one).
/// Every returned example has `corrupted` set; the mask lists corrupted ids
/// in ascending order.
pub fn corrupt(examples: &[VqaExample], spec: &CorruptionSpec) -> Result<(Vec<VqaExample>, Vec<u64>)> {
    spec.validate()?;
    let n = examples.len();
    let n_flip = (spec.label_flip_rate * n as f64 + 1e-9) as usize;
    let n_mismatch = (spec.mismatch_rate * n as f64 + 1e-9) as usize;
    let mut rng = rng::seeded(spec.seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    let mut by_type: BTreeMap<QuestionType, Vec<&str>> = BTreeMap::new();
    for ex in examples {
        let pool = by_type.entry(ex.question_type).or_default();
        if !pool.contains(&ex.answer.as_str()) {
            pool.push(ex.answer.as_str());
        }
    }
    let mut all_answers: Vec<&str> = by_type.values().flatten().copied().collect();
    all_answers.sort_unstable();
    all_answers.dedup();

    let mut out: Vec<VqaExample> = examples.to_vec();
    for ex in &mut out {
        ex.corrupted = Some(false);
    }
    for &i in &order[..n_flip] {
        let original = examples[i].answer.as_str();
        let typed: Vec<&str> = by_type[&examples[i].question_type].iter().copied().filter(|&a| a != original).collect();
        let pool = if typed.is_empty() {
            all_answers.iter().copied().filter(|&a| a != original).collect()
        } else {
            typed
        };
        if pool.is_empty() {
            return Err(Error::Data("cannot flip labels: the dataset has a single answer".into()));
        }
        out[i].answer = String::from(pool[rng.random_range(0..pool.len())]);
        out[i].corrupted = Some(true);
    }
    for &i in &order[n_flip..n_flip + n_mismatch] {
        if n < 2 {
            return Err(Error::Data("cannot swap images with fewer than 2 examples".into()));
        }
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        out[i].image_features = examples[j].image_features.clone();
        out[i].corrupted = Some(true);
    }
    let mut mask: Vec<u64> = order[..n_flip + n_mismatch].iter().map(|&i| examples[i].id).collect();
    mask.sort_unstable();
    Ok((out, mask))
}
