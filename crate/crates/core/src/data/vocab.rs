use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub const UNKNOWN_TOKEN: &str = "<unk>";
/// Size of the most-frequent-word vocabulary used for PathVQA.
pub const DEFAULT_VOCAB_CAP: usize = 4631;

/// Token/id bijection. Id 0 is [`UNKNOWN_TOKEN`]; the kept tokens take ids
/// `1..size` in order of decreasing frequency.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: BTreeMap<String, u32>,
}

impl From<Vec<String>> for Vocabulary {
    fn from(tokens: Vec<String>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Vocabulary { tokens, index }
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.tokens
    }
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(0)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn encode<'a>(&self, tokens: impl IntoIterator<Item = &'a str>) -> Vec<u32> {
        tokens.into_iter().map(|t| self.id(t)).collect()
    }
}

/// Keeps the `cap` most frequent tokens, ties broken lexicographically.
pub fn build_vocabulary<'a>(tokens: impl IntoIterator<Item = &'a str>, cap: usize) -> Vocabulary {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in tokens {
        if t != UNKNOWN_TOKEN {
            *counts.entry(t).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    // BTreeMap order is lexicographic; the stable sort keeps it within a count
    ranked.sort_by_key(|e| core::cmp::Reverse(e.1));
    let mut tokens = Vec::with_capacity(cap.min(ranked.len()) + 1);
    tokens.push(UNKNOWN_TOKEN.to_string());
    tokens.extend(ranked.into_iter().take(cap.max(1)).map(|(t, _)| t.to_string()));
    Vocabulary::from(tokens)
}

/// Closed answer set: distinct answer strings in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct AnswerTable {
    answers: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl From<Vec<String>> for AnswerTable {
    fn from(answers: Vec<String>) -> Self {
        let index = answers.iter().enumerate().map(|(i, a)| (a.clone(), i)).collect();
        AnswerTable { answers, index }
    }
}

impl From<AnswerTable> for Vec<String> {
    fn from(t: AnswerTable) -> Self {
        t.answers
    }
}

impl AnswerTable {
    pub fn from_answers<'a>(answers: impl IntoIterator<Item = &'a str>) -> Self {
        let set: alloc::collections::BTreeSet<&str> = answers.into_iter().collect();
        AnswerTable::from(set.into_iter().map(ToString::to_string).collect::<Vec<_>>())
    }

    pub fn len(&self) -> usize {
        self.answers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.answers.is_empty()
    }

    pub fn class_of(&self, answer: &str) -> Option<usize> {
        self.index.get(answer).copied()
    }

    pub fn answer(&self, class: usize) -> &str {
        &self.answers[class]
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.answers.iter().map(String::as_str)
    }
}
