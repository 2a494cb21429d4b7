//! Answer-quality metrics: exact match, per-example token F1 averaged over
//! examples, and corpus-level BLEU-n.
//!
//! All strings are lowercased and whitespace-normalized first.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::{Codebook, EncodedExample, QuestionType};
use crate::models::TwoTowerModel;
use crate::math;
use crate::{Error, Result};

pub fn normalize(s: &str) -> String {
    let lower = s.to_lowercase();
    let mut out = String::with_capacity(lower.len());
    for (i, tok) in lower.split_whitespace().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(tok);
    }
    out
}

fn tokens(s: &str) -> Vec<String> {
    normalize(s).split(' ').filter(|t| !t.is_empty()).map(String::from).collect()
}

fn check_lengths(preds: usize, golds: usize) -> Result<()> {
    if preds != golds {
        return Err(Error::Contract(format!("{preds} predictions for {golds} references")));
    }
    Ok(())
}

pub fn exact_match_accuracy<S: AsRef<str>, T: AsRef<str>>(preds: &[S], golds: &[T]) -> Result<f64> {
    check_lengths(preds.len(), golds.len())?;
    if preds.is_empty() {
        return Err(Error::Contract("accuracy over zero examples".into()));
    }
    let hits = preds
        .iter()
        .zip(golds)
        .filter(|(p, g)| normalize(p.as_ref()) == normalize(g.as_ref()))
        .count();
    Ok(hits as f64 / preds.len() as f64)
}

/// Token-multiset F1 of one prediction: 1 when both are empty, 0 when exactly
/// one is.
pub fn token_f1(pred: &str, gold: &str) -> f64 {
    let (p, g) = (tokens(pred), tokens(gold));
    if p.is_empty() && g.is_empty() {
        return 1.0;
    }
    if p.is_empty() || g.is_empty() {
        return 0.0;
    }
    let mut counts: BTreeMap<&str, isize> = BTreeMap::new();
    for t in &g {
        *counts.entry(t).or_default() += 1;
    }
    let mut common = 0usize;
    for t in &p {
        if let Some(c) = counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / p.len() as f64;
    let recall = common as f64 / g.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

pub fn macro_token_f1<S: AsRef<str>, T: AsRef<str>>(preds: &[S], golds: &[T]) -> Result<f64> {
    check_lengths(preds.len(), golds.len())?;
    if preds.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = preds.iter().zip(golds).map(|(p, g)| token_f1(p.as_ref(), g.as_ref())).sum();
    Ok(total / preds.len() as f64)
}

fn ngram_counts(toks: &[String], k: usize) -> BTreeMap<&[String], usize> {
    let mut out = BTreeMap::new();
    if toks.len() >= k {
        for w in toks.windows(k) {
            *out.entry(w).or_default() += 1;
        }
    }
    out
}

/// Corpus BLEU up to order `n ∈ {1, 2, 3}` with uniform weights: the geometric
/// mean of clipped k-gram precisions times the brevity penalty
/// `exp(1 − r/c)` when the candidate corpus is shorter than the reference.
pub fn bleu_n<S: AsRef<str>, T: AsRef<str>>(preds: &[S], golds: &[T], n: usize) -> Result<f64> {
    if !(1..=3).contains(&n) {
        return Err(Error::Contract(format!("BLEU order must be 1, 2 or 3, got {n}")));
    }
    check_lengths(preds.len(), golds.len())?;
    let preds: Vec<Vec<String>> = preds.iter().map(|p| tokens(p.as_ref())).collect();
    let golds: Vec<Vec<String>> = golds.iter().map(|g| tokens(g.as_ref())).collect();
    let cand_len: usize = preds.iter().map(Vec::len).sum();
    let ref_len: usize = golds.iter().map(Vec::len).sum();
    if cand_len == 0 {
        return Ok(0.0);
    }
    let mut log_sum = 0.0;
    for k in 1..=n {
        let mut matched = 0usize;
        let mut total = 0usize;
        for (p, g) in preds.iter().zip(&golds) {
            let refs = ngram_counts(g, k);
            for (gram, count) in ngram_counts(p, k) {
                matched += count.min(refs.get(gram).copied().unwrap_or(0));
                total += count;
            }
        }
        if matched == 0 {
            return Ok(0.0);
        }
        log_sum += math::ln(matched as f64 / total as f64);
    }
    let bp = if cand_len < ref_len { math::exp(1.0 - ref_len as f64 / cand_len as f64) } else { 1.0 };
    Ok((bp * math::exp(log_sum / n as f64)).min(1.0))
}

/// Exact-match accuracy within each question type; types with no examples are absent.
pub fn per_type_accuracy<S: AsRef<str>, T: AsRef<str>, U: AsRef<str>>(
    preds: &[S],
    golds: &[T],
    types: &[U],
) -> Result<BTreeMap<String, (f64, usize)>> {
    check_lengths(preds.len(), golds.len())?;
    check_lengths(types.len(), golds.len())?;
    let mut hits: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for ((p, g), t) in preds.iter().zip(golds).zip(types) {
        let t: QuestionType = t.as_ref().parse()?;
        let e = hits.entry(String::from(t.as_str())).or_default();
        e.1 += 1;
        if normalize(p.as_ref()) == normalize(g.as_ref()) {
            e.0 += 1;
        }
    }
    Ok(hits.into_iter().map(|(t, (h, n))| (t, (h as f64 / n as f64, n))).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub accuracy: f64,
    pub f1: f64,
    /// BLEU-1, BLEU-2, BLEU-3 keyed by order.
    pub bleu: BTreeMap<String, f64>,
    pub per_type_accuracy: BTreeMap<String, f64>,
    pub per_type_count: BTreeMap<String, usize>,
}

impl EvalReport {
    pub fn compute<S: AsRef<str>, T: AsRef<str>, U: AsRef<str>>(preds: &[S], golds: &[T], types: &[U]) -> Result<Self> {
        let per_type = per_type_accuracy(preds, golds, types)?;
        let mut bleu = BTreeMap::new();
        for n in 1..=3 {
            bleu.insert(format!("{n}"), bleu_n(preds, golds, n)?);
        }
        Ok(EvalReport {
            n: preds.len(),
            accuracy: exact_match_accuracy(preds, golds)?,
            f1: macro_token_f1(preds, golds)?,
            bleu,
            per_type_accuracy: per_type.iter().map(|(t, (a, _))| (t.clone(), *a)).collect(),
            per_type_count: per_type.into_iter().map(|(t, (_, n))| (t, n)).collect(),
        })
    }

    pub const TSV_HEADER: &'static str = "n\taccuracy\tbleu1\tbleu2\tbleu3\tf1";

    /// One tab-separated line matching [`EvalReport::TSV_HEADER`].
    pub fn tsv_line(&self) -> String {
        let b = |k: &str| self.bleu.get(k).copied().unwrap_or(0.0);
        format!("{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}", self.n, self.accuracy, b("1"), b("2"), b("3"), self.f1)
    }
}

/// Area under the ROC curve for `scores` separating `positive` examples
/// (higher score = more likely positive), by the rank-sum statistic with
/// ties counted as one half.
pub fn roc_auc(scores: &[f64], positive: &[bool]) -> Result<f64> {
    check_lengths(scores.len(), positive.len())?;
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Contract("AUC of NaN scores".into()));
    }
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Contract(format!("AUC needs both classes, got {n_pos} positive and {n_neg} negative")));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        // 1-based average rank of the tie block
        let rank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += rank * idx[i..=j].iter().filter(|&&k| positive[k]).count() as f64;
        i = j + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos * n_neg) as f64)
}

/// Predicts every example with the full model and scores the predicted answer
/// strings against the examples' stored answers.
pub fn evaluate(model: &TwoTowerModel, examples: &[&EncodedExample], codebook: &Codebook) -> Result<EvalReport> {
    let classes = model.dims.predict(&model.params, examples, true)?;
    let preds: Vec<&str> = classes.iter().map(|&c| codebook.answer(c)).collect();
    let golds: Vec<&str> = examples.iter().map(|e| codebook.answer(e.answer_class)).collect();
    let types: Vec<&str> = examples.iter().map(|e| e.question_type.as_str()).collect();
    EvalReport::compute(&preds, &golds, &types)
}
