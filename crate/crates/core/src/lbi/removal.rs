use alloc::format;
use alloc::vec::Vec;

use super::IgnoringState;
use crate::{Error, Result};

/// Drops every example with `a_i < threshold`. Returns the kept examples in
/// their original order and the removed positions in ascending order.
pub fn apply_removal<T: Clone>(examples: &[T], state: &IgnoringState, threshold: f64) -> Result<(Vec<T>, Vec<usize>)> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Config(format!("removal threshold must lie in [0, 1], got {threshold}")));
    }
    if examples.len() != state.len() {
        return Err(Error::Data(format!(
            "{} examples but {} ignoring variables",
            examples.len(),
            state.len()
        )));
    }
    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for (i, ex) in examples.iter().enumerate() {
        if state.a(i) < threshold {
            removed.push(i);
        } else {
            kept.push(ex.clone());
        }
    }
    if kept.is_empty() && !examples.is_empty() {
        return Err(Error::Run {
            epoch: state.epoch,
            detail: format!("threshold {threshold} removes all {} training examples", examples.len()),
        });
    }
    Ok((kept, removed))
}
