//! Self-supervised pretraining: image/question matching, image/answer
//! matching and question-only answer prediction, trained jointly, and the
//! pretrain → transfer → fine-tune pipeline.

mod finetune;
mod pairs;
mod pretrain;

pub use finetune::{finetune, pretrain_then_finetune, FinetuneData, FinetuneOutcome, Retrained};
pub use pairs::{sample_pairs, MatchPair, PairBatch, PairMode};
pub use pretrain::{
    joint_pretrain_loss, pretrain, ssl_qa_loss, CurvePoint, JointWeights, PretrainConfig, PretrainData, PretrainOutcome,
};
