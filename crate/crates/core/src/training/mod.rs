//! Teacher-forced training: token-budget batching, label-smoothed loss and
//! the Adam loop with dev-set early stopping.

mod batch;
mod loss;
mod trainer;

pub use batch::{make_batches, Batch, Batching, Triplet};
pub use loss::{log_softmax_at, nll_loss, sequence_nll, token_logprobs};
pub use trainer::{
    argmax, evaluate, evaluate_batches, train, train_step, DevMetrics, EvalRecord, TrainConfig,
    TrainState,
};

use crate::error::Result;
use crate::model::{ModelConfig, SourceMode};

/// `config` rewired for one of the source modes: `multi`, `src-pe` (or
/// `src->pe`), `mt-pe` (or `mt->pe`).
pub fn single_source_mode(config: &ModelConfig, mode: &str) -> Result<ModelConfig> {
    let mode: SourceMode = mode.parse()?;
    Ok(config.clone().with_mode(mode))
}
