//! Learning by ignoring.
//!
//! Every training example `i` carries an ignoring variable `a_i ∈ (0, 1)`
//! that scales its loss. Validation loss after one unrolled gradient step on
//! the weighted training loss is minimized over the `a_i`, alternating with
//! ordinary updates of the model weights on the weighted loss.
//!
//! The hypergradient `∂L_val/∂a_i` is approximated with a central difference
//! of the per-example training losses along the validation gradient; see
//! [`hypergrad_fd`]. [`hypergrad_exact`] differentiates the unrolled objective
//! directly and serves as the oracle for it.

mod config;
mod hypergrad;
mod network;
mod removal;
mod state;
mod train;

pub use config::{EpsScaling, LbiConfig};
pub use hypergrad::{
    hypergrad_exact, hypergrad_fd, hypergrad_fd_detailed, unrolled_step, weighted_train_loss, weighted_train_loss_grad,
    FdHypergradient, HypergradientReport, EXACT_STEP,
};
pub use network::IgnoringNetwork;
pub use removal::apply_removal;
pub use state::IgnoringState;
pub use train::{lbi_train, train_with_network, EpochSnapshot, LbiOutcome, NetworkOutcome};
