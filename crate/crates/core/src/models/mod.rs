//! Model family used by the bilevel and pretraining code.
//!
//! Every trainable model is exposed as an [`Objective`]: an architecture that
//! maps a [`ParameterSet`] and a batch to per-example losses and to the
//! gradient of a weighted loss sum. The bilevel machinery only ever talks to
//! this trait.

mod init;
mod least_squares;
mod loss;
mod mlp;
mod two_tower;

pub use init::{init_params, xavier_bound, LayerShape};
pub use least_squares::{LeastSquares, RegressionExample};
pub use loss::PerExampleLoss;
pub use mlp::{ClassExample, MlpClassifier, MlpDims};
pub use two_tower::{
    match_forward_loss, transfer_encoders, vqa_forward_loss, AnswerObjective, MatchObjective, TwoTowerDims,
    TwoTowerModel, ENCODER_PARAMS,
};

use crate::diffcore::ParameterSet;
use crate::Result;

pub trait Objective {
    type Example;

    fn losses(&self, params: &ParameterSet, batch: &[&Self::Example]) -> Result<PerExampleLoss>;

    /// Per-example losses together with `∇_W Σ_b weights_b · L_b`.
    fn weighted_grad(
        &self,
        params: &ParameterSet,
        batch: &[&Self::Example],
        weights: &[f64],
    ) -> Result<(PerExampleLoss, ParameterSet)>;

    /// Mean loss and its gradient.
    fn mean_loss_grad(&self, params: &ParameterSet, batch: &[&Self::Example]) -> Result<(f64, ParameterSet)> {
        let w = alloc::vec![1.0 / batch.len().max(1) as f64; batch.len()];
        let (losses, grad) = self.weighted_grad(params, batch, &w)?;
        Ok((losses.mean(), grad))
    }
}

fn check_weights(batch: usize, weights: &[f64]) -> Result<()> {
    if batch != weights.len() {
        return Err(crate::Error::shape(
            "weighted_grad",
            alloc::format!("{} examples vs {} weights", batch, weights.len()),
        ));
    }
    Ok(())
}
