use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use super::vocab::{AnswerTable, Vocabulary};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionType {
    What,
    Where,
    How,
    HowMany,
    Why,
    YesNo,
}

impl QuestionType {
    pub const ALL: [QuestionType; 6] = [
        QuestionType::What,
        QuestionType::Where,
        QuestionType::How,
        QuestionType::HowMany,
        QuestionType::Why,
        QuestionType::YesNo,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            QuestionType::What => "what",
            QuestionType::Where => "where",
            QuestionType::How => "how",
            QuestionType::HowMany => "how_many",
            QuestionType::Why => "why",
            QuestionType::YesNo => "yes_no",
        }
    }
}

impl fmt::Display for QuestionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QuestionType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        QuestionType::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Data(format!("unknown question type `{s}`")))
    }
}

/// One question about one image, as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VqaExample {
    pub id: u64,
    pub image_features: Vec<f64>,
    #[serde(rename = "question_tokens")]
    pub question: Vec<String>,
    pub question_type: QuestionType,
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corrupted: Option<bool>,
}

/// A [`VqaExample`] mapped through a [`Codebook`]: token ids and an answer class.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedExample {
    pub id: u64,
    pub image: Vec<f64>,
    pub question: Vec<u32>,
    pub answer_tokens: Vec<u32>,
    pub answer_class: usize,
    pub question_type: QuestionType,
    pub corrupted: Option<bool>,
}

/// Vocabulary plus closed answer set shared by pretraining and fine-tuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub vocab: Vocabulary,
    pub answers: AnswerTable,
}

impl Codebook {
    /// Vocabulary over question and answer tokens, answers over answer strings.
    pub fn build(examples: &[VqaExample], vocab_cap: usize) -> Self {
        let texts = examples
            .iter()
            .flat_map(|ex| ex.question.iter().map(String::as_str).chain(ex.answer.split_whitespace()));
        let vocab = super::vocab::build_vocabulary(texts, vocab_cap);
        let answers = AnswerTable::from_answers(examples.iter().map(|ex| ex.answer.as_str()));
        Codebook { vocab, answers }
    }

    pub fn encode(&self, ex: &VqaExample) -> Result<EncodedExample> {
        let answer_class = self
            .answers
            .class_of(&ex.answer)
            .ok_or_else(|| Error::Data(format!("example {}: answer `{}` is not in the answer set", ex.id, ex.answer)))?;
        Ok(EncodedExample {
            id: ex.id,
            image: ex.image_features.clone(),
            question: self.vocab.encode(ex.question.iter().map(String::as_str)),
            answer_tokens: self.vocab.encode(ex.answer.split_whitespace()),
            answer_class,
            question_type: ex.question_type,
            corrupted: ex.corrupted,
        })
    }

    pub fn encode_all(&self, examples: &[VqaExample]) -> Result<Vec<EncodedExample>> {
        examples.iter().map(|ex| self.encode(ex)).collect()
    }

    pub fn answer(&self, class: usize) -> &str {
        self.answers.answer(class)
    }
}

impl VqaExample {
    pub fn question_text(&self) -> String {
        self.question.join(" ")
    }

    pub fn type_tag(&self) -> String {
        self.question_type.to_string()
    }
}
