//! Synthetic VQA data with known corruption ground truth.

mod corrupt;
mod example;
mod split;
mod synthetic;
mod vocab;

pub use corrupt::{corrupt, CorruptionSpec};
pub use example::{Codebook, EncodedExample, QuestionType, VqaExample};
pub use split::{stratified_split, Split, SplitSpec};
pub use synthetic::{generate_synthetic, SyntheticSpec};
pub use vocab::{build_vocabulary, AnswerTable, Vocabulary, DEFAULT_VOCAB_CAP, UNKNOWN_TOKEN};
