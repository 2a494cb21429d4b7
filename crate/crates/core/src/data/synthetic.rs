//! Desk-scale stand-in for a pathology VQA corpus.
//!
//! Each example draws a latent concept `c`. The image is the concept's
//! prototype plus isotropic Gaussian noise. The question is a template for
//! the question type that names a coarse region shared by pairs of concepts,
//! so the question alone narrows `c` to two candidates and the image is
//! needed to finish the job. The answer is a fixed function of
//! `(c, question type)`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{QuestionType, VqaExample};
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub n: usize,
    pub image_dim: usize,
    pub n_concepts: usize,
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec { n: 2000, image_dim: 16, n_concepts: 8, noise: 0.3, seed: 0 }
    }
}

const REGIONS: [&str; 8] = ["hepatic", "pulmonary", "renal", "cardiac", "splenic", "cerebral", "gastric", "dermal"];
const WHAT: [&str; 7] = [
    "fibrous tissue",
    "adipose tissue",
    "squamous epithelium",
    "granuloma",
    "coagulative necrosis",
    "hemorrhage",
    "amyloid deposits",
];
const WHERE: [&str; 6] = ["in the liver", "in the lung", "in the kidney", "in the heart", "in the spleen", "in the brain"];
const HOW: [&str; 5] = ["by infiltration", "by compression", "by metastasis", "by fibrosis", "by embolism"];
const HOW_MANY: [&str; 4] = ["one", "two", "three", "four"];
const WHY: [&str; 5] = ["due to ischemia", "due to infection", "due to trauma", "due to inflammation", "due to toxins"];

/// Question-type frequencies, deliberately imbalanced.
const TYPE_WEIGHTS: [(QuestionType, u32); 6] = [
    (QuestionType::YesNo, 35),
    (QuestionType::What, 25),
    (QuestionType::Where, 12),
    (QuestionType::How, 10),
    (QuestionType::HowMany, 10),
    (QuestionType::Why, 8),
];

/// The answer truth table.
pub fn true_answer(concept: usize, qtype: QuestionType) -> &'static str {
    match qtype {
        QuestionType::What => WHAT[concept % WHAT.len()],
        QuestionType::Where => WHERE[(3 * concept + 1) % WHERE.len()],
        QuestionType::How => HOW[(2 * concept + 3) % HOW.len()],
        QuestionType::HowMany => HOW_MANY[(concept * concept + 1) % HOW_MANY.len()],
        QuestionType::Why => WHY[(3 * concept + 2) % WHY.len()],
        QuestionType::YesNo => {
            if (concept * 5 + 1).is_multiple_of(3) || concept % 4 == 1 {
                "yes"
            } else {
                "no"
            }
        }
    }
}

/// Coarse region named in the question: concepts `2k` and `2k+1` share one.
pub fn region_of(concept: usize) -> &'static str {
    REGIONS[(concept / 2) % REGIONS.len()]
}

fn question_tokens(qtype: QuestionType, concept: usize, variant: bool) -> Vec<String> {
    let region = region_of(concept);
    let noun = if variant { "slide" } else { "section" };
    let words: Vec<&str> = match qtype {
        QuestionType::What => alloc::vec!["what", "is", "present", "in", "this", region, noun],
        QuestionType::Where => alloc::vec!["where", "does", "this", region, "lesion", "arise"],
        QuestionType::How => alloc::vec!["how", "does", "the", region, "lesion", "spread"],
        QuestionType::HowMany => alloc::vec!["how", "many", region, "foci", "are", "visible"],
        QuestionType::Why => alloc::vec!["why", "is", "the", region, noun, "abnormal"],
        QuestionType::YesNo => alloc::vec!["is", "the", region, noun, "malignant"],
    };
    words.into_iter().map(ToString::to_string).collect()
}

fn sample_type(rng: &mut rng::Rng) -> QuestionType {
    let total: u32 = TYPE_WEIGHTS.iter().map(|(_, w)| w).sum();
    let mut r = rng.random_range(0..total);
    for (t, w) in TYPE_WEIGHTS {
        if r < w {
            return t;
        }
        r -= w;
    }
    unreachable!()
}

/// Concept prototypes: one standard-normal vector per concept.
pub fn prototypes(spec: &SyntheticSpec) -> Vec<Vec<f64>> {
    let mut rng = rng::seeded(rng::derive(spec.seed, 1));
    (0..spec.n_concepts)
        .map(|_| (0..spec.image_dim).map(|_| rng::normal(&mut rng)).collect())
        .collect()
}

/// Generates `spec.n` examples with ids `0..n`, plus the latent concept of each.
pub fn generate_with_concepts(spec: &SyntheticSpec) -> Result<(Vec<VqaExample>, Vec<usize>)> {
    if spec.n_concepts < 2 {
        return Err(Error::Config("the generator needs at least 2 concepts".into()));
    }
    if spec.image_dim == 0 || !(spec.noise >= 0.0) {
        return Err(Error::Config("image_dim must be positive and noise non-negative".into()));
    }
    let protos = prototypes(spec);
    let mut rng = rng::seeded(rng::derive(spec.seed, 2));
    let mut examples = Vec::with_capacity(spec.n);
    let mut concepts = Vec::with_capacity(spec.n);
    for id in 0..spec.n {
        let c = rng.random_range(0..spec.n_concepts);
        let qtype = sample_type(&mut rng);
        let variant = rng.random_bool(0.5);
        let image_features = protos[c].iter().map(|&p| p + spec.noise * rng::normal(&mut rng)).collect();
        examples.push(VqaExample {
            id: id as u64,
            image_features,
            question: question_tokens(qtype, c, variant),
            question_type: qtype,
            answer: true_answer(c, qtype).to_string(),
            corrupted: None,
        });
        concepts.push(c);
    }
    Ok((examples, concepts))
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Vec<VqaExample>> {
    generate_with_concepts(spec).map(|(examples, _)| examples)
}
