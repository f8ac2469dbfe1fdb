use crate::error::{Error, Result};
use crate::model::{Model, SeqBatch, SessionOptions, PAD};
use crate::numerics::{Float, Smoothing, Tape, Var};

use super::Triplet;

/// Mean label-smoothed cross-entropy over the non-PAD positions of
/// `targets`. `logits` may be `[T, V]` or `[B, T, V]`; targets are the
/// row-major flattening of the leading axes.
///
/// The gold token receives mass `1 - epsilon`; `epsilon` is spread evenly
/// over every other non-PAD entry. The loss is reported as KL divergence,
/// so a perfect prediction scores 0 even when smoothing is on.
pub fn nll_loss<T: Float>(
    tape: &mut Tape<T>,
    logits: Var,
    targets: &[usize],
    epsilon: f64,
) -> Result<Var> {
    if targets.iter().all(|&t| t == PAD) {
        return Err(Error::Contract("nll_loss: every target is PAD".into()));
    }
    tape.cross_entropy(
        logits,
        targets,
        Smoothing {
            epsilon,
            ignore: Some(PAD),
        },
    )
}

/// Teacher-forced log-probability of each decoder step for one triplet,
/// i.e. `ln P(z_n | x, y, z_<n)` for every token of the pe followed by EOS.
pub fn token_logprobs<T: Float>(model: &Model<T>, triplet: &Triplet) -> Result<Vec<f64>> {
    let mut s = model.session(SessionOptions {
        record_attention: false,
        ..SessionOptions::eval()
    });
    let (logits, _) = s.forward(
        &SeqBatch::single(&triplet.src)?,
        &SeqBatch::single(&triplet.mt)?,
        &SeqBatch::single(&triplet.pe_input())?,
    )?;
    let value = s.value(logits);
    let v = value.last_dim();
    Ok(value
        .data()
        .chunks(v)
        .zip(triplet.pe_target())
        .map(|(row, gold)| log_softmax_at(row, gold))
        .collect())
}

/// `ln softmax(row)[k]`, computed in f64.
pub fn log_softmax_at<T: Float>(row: &[T], k: usize) -> f64 {
    let max = row
        .iter()
        .map(|v| v.as_f64())
        .fold(f64::NEG_INFINITY, f64::max);
    let lse = max
        + row
            .iter()
            .map(|v| (v.as_f64() - max).exp())
            .sum::<f64>()
            .ln();
    row[k].as_f64() - lse
}

/// Total negative log-likelihood of the pe given src and mt (ε = 0).
pub fn sequence_nll<T: Float>(model: &Model<T>, triplet: &Triplet) -> Result<f64> {
    Ok(-token_logprobs(model, triplet)?.iter().sum::<f64>())
}
