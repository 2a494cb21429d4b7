//! Learning-by-ignoring for visual question answering on a desk-scale
//! two-tower model.
//!
//! The crate is `no_std` + `alloc`. File formats, the command line and
//! anything else touching the operating system live in the `lbi` crate.
//!
//! Layout:
//!
//! * [`diffcore`]: dense `f64` tensors, hand-derived backward passes,
//!   finite-difference checking and Adam.
//! * [`models`]: MLP classifier, two-tower VQA model, least-squares
//!   regressor, all behind the [`models::Objective`] trait.
//! * [`lbi`]: ignoring variables, one-step-unrolled hypergradients, the
//!   alternating training loop and hard removal.
//! * [`ssl`]: image/question and image/answer matching, question-only answer
//!   prediction, joint pretraining and encoder transfer.
//! * [`data`]: synthetic VQA generation with known corruption, stratified
//!   splitting and vocabularies.
//! * [`metrics`]: exact match, token F1, BLEU-n.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod data;
pub mod diffcore;
mod error;
pub mod lbi;
pub mod math;
pub mod metrics;
pub mod models;
pub mod rng;
pub mod ssl;

pub use error::{Error, Result};
