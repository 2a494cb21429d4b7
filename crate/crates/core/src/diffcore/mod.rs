//! Minimal deterministic numeric core.
//!
//! Backward passes are hand-derived per layer (see [`layers`]) rather than
//! recorded on a tape: the model family is closed and small, and every
//! backward is checked against [`finite_diff_grad`].

mod adam;
mod gradcheck;
pub mod layers;
mod params;
mod tensor;

pub use adam::{AdamConfig, AdamState, LazyAdam};
pub use gradcheck::{finite_diff_grad, max_relative_error, relative_error};
pub use params::ParameterSet;
pub use tensor::{binary_cross_entropy, binary_cross_entropy_with_logits, cross_entropy_with_softmax, Tensor};
