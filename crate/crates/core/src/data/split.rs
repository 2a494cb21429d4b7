use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{QuestionType, VqaExample};
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSpec {
    /// train : val : test
    pub ratios: [f64; 3],
    pub stratify: bool,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { ratios: [3.0, 1.0, 1.0], stratify: true, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<VqaExample>,
    pub val: Vec<VqaExample>,
    pub test: Vec<VqaExample>,
}

impl Split {
    pub fn ids(part: &[VqaExample]) -> Vec<u64> {
        part.iter().map(|e| e.id).collect()
    }
}

/// Largest-remainder apportionment of `total` by `weights`.
fn apportion(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let quotas: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| *q as usize).collect();
    let mut left = total - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - counts[a] as f64;
        let fb = quotas[b] - counts[b] as f64;
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &k in &order {
        if left == 0 {
            break;
        }
        counts[k] += 1;
        left -= 1;
    }
    counts
}

/// Rounds the category × split quota table so that every cell is the floor or
/// ceiling of its quota, every category sums to its size and every split sums
/// to its globally apportioned size. Solved as a unit-capacity flow: each
/// category owes `R_c` round-ups, each split can absorb `S_k`.
fn controlled_rounding(sizes: &[usize], ratios: &[f64; 3]) -> Vec<[usize; 3]> {
    let total: usize = sizes.iter().sum();
    let targets = apportion(total, ratios);
    let sum: f64 = ratios.iter().sum();
    let quota = |c: usize, k: usize| sizes[c] as f64 * ratios[k] / sum;
    let mut cells: Vec<[usize; 3]> = (0..sizes.len())
        .map(|c| [0, 1, 2].map(|k| quota(c, k) as usize))
        .collect();
    let mut owe: Vec<usize> = cells.iter().zip(sizes).map(|(row, &n)| n - row.iter().sum::<usize>()).collect();
    let mut room: Vec<usize> = (0..3).map(|k| targets[k] - cells.iter().map(|r| r[k]).sum::<usize>()).collect();
    let mut up = vec![[false; 3]; sizes.len()];

    // greedy pass by fractional part, then augmenting paths for the rest
    let mut order: Vec<(usize, usize)> = (0..sizes.len()).flat_map(|c| (0..3).map(move |k| (c, k))).collect();
    order.sort_by(|&(c1, k1), &(c2, k2)| {
        let f1 = quota(c1, k1) - cells[c1][k1] as f64;
        let f2 = quota(c2, k2) - cells[c2][k2] as f64;
        f2.partial_cmp(&f1).unwrap().then((c1, k1).cmp(&(c2, k2)))
    });
    for &(c, k) in &order {
        if owe[c] > 0 && room[k] > 0 && quota(c, k) > cells[c][k] as f64 {
            up[c][k] = true;
            owe[c] -= 1;
            room[k] -= 1;
        }
    }
    for c in 0..sizes.len() {
        while owe[c] > 0 {
            let mut seen_c = vec![false; sizes.len()];
            let mut seen_k = [false; 3];
            if !augment(c, &mut up, &mut room, &mut seen_c, &mut seen_k) {
                break;
            }
            owe[c] -= 1;
        }
    }
    for (row, flags) in cells.iter_mut().zip(&up) {
        for k in 0..3 {
            row[k] += flags[k] as usize;
        }
    }
    cells
}

fn augment(c: usize, up: &mut [[bool; 3]], room: &mut [usize], seen_c: &mut [bool], seen_k: &mut [bool; 3]) -> bool {
    seen_c[c] = true;
    for k in 0..3 {
        if up[c][k] || seen_k[k] {
            continue;
        }
        seen_k[k] = true;
        if room[k] > 0 {
            room[k] -= 1;
            up[c][k] = true;
            return true;
        }
        // reroute a category already rounding up in split k
        for c2 in 0..up.len() {
            if up[c2][k] && !seen_c[c2] && augment(c2, up, room, seen_c, seen_k) {
                up[c2][k] = false;
                up[c][k] = true;
                return true;
            }
        }
    }
    false
}

/// Per-question-type train/val/test partition.
///
/// With `stratify` off the whole dataset is treated as a single category.
/// Each example is its own image here, so splitting by example id keeps every
/// image's questions in a single split.
pub fn stratified_split(examples: &[VqaExample], spec: &SplitSpec) -> Result<Split> {
    if spec.ratios.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::Config(format!("split ratios must be positive, got {:?}", spec.ratios)));
    }
    let mut groups: BTreeMap<Option<QuestionType>, Vec<usize>> = BTreeMap::new();
    for (i, ex) in examples.iter().enumerate() {
        let key = if spec.stratify { Some(ex.question_type) } else { None };
        groups.entry(key).or_default().push(i);
    }
    for (key, members) in &groups {
        if members.len() < 3 {
            let name = key.map(|t| t.as_str()).unwrap_or("all");
            return Err(Error::Data(format!(
                "question type `{name}` has {} examples; at least 3 are needed to split",
                members.len()
            )));
        }
    }
    let sizes: Vec<usize> = groups.values().map(Vec::len).collect();
    let table = controlled_rounding(&sizes, &spec.ratios);
    let mut rng = rng::seeded(spec.seed);
    let mut parts: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (members, counts) in groups.values().zip(&table) {
        let mut members = members.clone();
        members.shuffle(&mut rng);
        let mut offset = 0;
        for k in 0..3 {
            parts[k].extend_from_slice(&members[offset..offset + counts[k]]);
            offset += counts[k];
        }
    }
    let take = |idx: &mut Vec<usize>| {
        idx.sort_unstable();
        idx.iter().map(|&i| examples[i].clone()).collect::<Vec<_>>()
    };
    let [mut a, mut b, mut c] = parts;
    Ok(Split { train: take(&mut a), val: take(&mut b), test: take(&mut c) })
}
