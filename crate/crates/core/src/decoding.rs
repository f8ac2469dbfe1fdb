//! Auto-regressive generation of the post-edit.
//!
//! Both searches encode src and mt once and then re-run the decoder over the
//! whole prefix at every step. All live beam hypotheses share a length, so
//! they go through the decoder as one unpadded batch.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::model::{HiddenStates, Model, SeqBatch, Session, SessionOptions, BOS, EOS};
use crate::numerics::Float;
use crate::training::log_softmax_at;

pub const DEFAULT_BEAM: usize = 4;
pub const DEFAULT_ALPHA: f64 = 0.6;

/// `1.5·mt_len + 10`.
pub fn default_max_len(mt_len: usize) -> usize {
    (1.5 * mt_len as f64).floor() as usize + 10
}

/// A partial or complete output.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    /// Generated ids, BOS excluded; ends in EOS when the model stopped.
    pub ids: Vec<usize>,
    pub logprob: f64,
    pub finished: bool,
}

impl Hypothesis {
    /// The post-edit proper: `ids` without a trailing EOS.
    pub fn tokens(&self) -> &[usize] {
        match self.ids.split_last() {
            Some((&EOS, rest)) => rest,
            _ => &self.ids,
        }
    }

    /// True when generation hit the length limit instead of emitting EOS.
    pub fn truncated(&self) -> bool {
        self.ids.last() != Some(&EOS)
    }

    /// `logprob / len^alpha`.
    pub fn score(&self, alpha: f64) -> f64 {
        if alpha == 0.0 {
            self.logprob
        } else {
            self.logprob / (self.ids.len().max(1) as f64).powf(alpha)
        }
    }
}

fn eval_session<T: Float>(model: &Model<T>) -> Session<'_, T> {
    model.session(SessionOptions {
        record_attention: false,
        ..SessionOptions::eval()
    })
}

fn check_inputs<T: Float>(
    model: &Model<T>,
    x: &[usize],
    y: &[usize],
    max_len: usize,
) -> Result<usize> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::Input("decoding needs non-empty src and mt".into()));
    }
    if max_len == 0 {
        return Err(Error::Contract("max_len must be at least 1".into()));
    }
    // The decoder input is BOS plus all but the last generated token.
    Ok(max_len.min(model.config().max_len))
}

/// Next-token log-probabilities for every prefix in `prefixes` (equal
/// lengths, BOS included), one row per prefix.
fn step_logprobs<T: Float>(
    session: &mut Session<'_, T>,
    memory: &HiddenStates,
    prefixes: &[Vec<usize>],
) -> Result<Vec<Vec<f64>>> {
    let z = SeqBatch::new(prefixes)?;
    let mem = session.tile_states(memory, prefixes.len())?;
    let (logits, _) = session.decode(&z, &mem)?;
    let value = session.value(logits);
    let (t, v) = (z.len(), value.last_dim());
    Ok((0..prefixes.len())
        .map(|b| {
            let row = &value.data()[(b * t + t - 1) * v..(b * t + t) * v];
            (0..v).map(|k| log_softmax_at(row, k)).collect()
        })
        .collect())
}

/// Picks the most probable token at every step until EOS or `max_len`
/// tokens. Ties go to the lowest id.
pub fn greedy_decode<T: Float>(
    model: &Model<T>,
    x: &[usize],
    y: &[usize],
    max_len: usize,
) -> Result<Hypothesis> {
    let max_len = check_inputs(model, x, y, max_len)?;
    let mut s = eval_session(model);
    let (memory, _) = s.encode(&SeqBatch::single(x)?, &SeqBatch::single(y)?)?;
    let mut prefix = vec![BOS];
    let mut hyp = Hypothesis {
        ids: Vec::new(),
        logprob: 0.0,
        finished: false,
    };
    while !hyp.finished {
        let lp = step_logprobs(&mut s, &memory.states, std::slice::from_ref(&prefix))?.remove(0);
        let mut best = 0;
        for (k, &v) in lp.iter().enumerate() {
            if v > lp[best] {
                best = k;
            }
        }
        hyp.ids.push(best);
        hyp.logprob += lp[best];
        prefix.push(best);
        hyp.finished = best == EOS || hyp.ids.len() >= max_len;
    }
    Ok(hyp)
}

/// Orders by log-probability, higher first, then by ids, lower first.
fn by_logprob(a: &Hypothesis, b: &Hypothesis) -> Ordering {
    b.logprob
        .partial_cmp(&a.logprob)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.ids.cmp(&b.ids))
}

/// Beam search over `beam` hypotheses. Finished outputs are ranked by
/// `logprob / len^alpha`, ties going to the lexicographically smaller id
/// sequence.
pub fn beam_decode<T: Float>(
    model: &Model<T>,
    x: &[usize],
    y: &[usize],
    beam: usize,
    max_len: usize,
    alpha: f64,
) -> Result<Hypothesis> {
    if beam == 0 {
        return Err(Error::Config("beam must be at least 1".into()));
    }
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::Config(format!("length penalty {alpha} must be ≥ 0")));
    }
    let max_len = check_inputs(model, x, y, max_len)?;
    let mut s = eval_session(model);
    let (memory, _) = s.encode(&SeqBatch::single(x)?, &SeqBatch::single(y)?)?;
    let mut live = vec![Hypothesis {
        ids: Vec::new(),
        logprob: 0.0,
        finished: false,
    }];
    let mut finished: Vec<Hypothesis> = Vec::new();
    let rank = |a: &Hypothesis, b: &Hypothesis| {
        b.score(alpha)
            .partial_cmp(&a.score(alpha))
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.ids.cmp(&b.ids))
    };

    while !live.is_empty() {
        let prefixes: Vec<Vec<usize>> = live
            .iter()
            .map(|h| std::iter::once(BOS).chain(h.ids.iter().copied()).collect())
            .collect();
        let rows = step_logprobs(&mut s, &memory.states, &prefixes)?;
        let mut candidates = Vec::with_capacity(live.len() * rows[0].len());
        for (h, lp) in live.iter().zip(&rows) {
            for (k, &l) in lp.iter().enumerate() {
                let mut ids = h.ids.clone();
                ids.push(k);
                candidates.push(Hypothesis {
                    finished: k == EOS || ids.len() >= max_len,
                    ids,
                    logprob: h.logprob + l,
                });
            }
        }
        candidates.sort_by(by_logprob);
        candidates.truncate(beam);
        let (done, open): (Vec<_>, Vec<_>) = candidates.into_iter().partition(|h| h.finished);
        finished.extend(done);
        live = open;

        // Log-probabilities only fall as hypotheses grow, so a live one can
        // at best reach logprob / max_len^alpha.
        if let Some(best) = finished.iter().min_by(|a, b| rank(a, b)) {
            let ceiling = live
                .iter()
                .map(|h| h.logprob / (max_len as f64).powf(alpha))
                .fold(f64::NEG_INFINITY, f64::max);
            if best.score(alpha) >= ceiling {
                break;
            }
        }
    }
    finished
        .into_iter()
        .min_by(rank)
        .ok_or_else(|| Error::Contract("beam search produced no hypothesis".into()))
}

/// Teacher-forced `ln P(ids | x, y)`: the decoder sees BOS plus all but the
/// last of `ids`.
pub fn score_sequence<T: Float>(
    model: &Model<T>,
    x: &[usize],
    y: &[usize],
    ids: &[usize],
) -> Result<f64> {
    if ids.is_empty() {
        return Ok(0.0);
    }
    let mut s = eval_session(model);
    let prefix: Vec<usize> = std::iter::once(BOS)
        .chain(ids[..ids.len() - 1].iter().copied())
        .collect();
    let (logits, _) = s.forward(
        &SeqBatch::single(x)?,
        &SeqBatch::single(y)?,
        &SeqBatch::single(&prefix)?,
    )?;
    let value = s.value(logits);
    let v = value.last_dim();
    Ok(value
        .data()
        .chunks(v)
        .zip(ids)
        .map(|(row, &k)| log_softmax_at(row, k))
        .sum())
}

/// Decoding settings used by [`postedit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeOptions {
    /// 1 selects greedy search.
    pub beam: usize,
    pub alpha: f64,
    /// Fixed output cap; `None` uses [`default_max_len`] of each mt.
    pub max_len: Option<usize>,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        Self {
            beam: DEFAULT_BEAM,
            alpha: DEFAULT_ALPHA,
            max_len: None,
        }
    }
}

/// Decodes one (src, mt) pair.
pub fn postedit<T: Float>(
    model: &Model<T>,
    x: &[usize],
    y: &[usize],
    opts: DecodeOptions,
) -> Result<Hypothesis> {
    let max_len = opts.max_len.unwrap_or_else(|| default_max_len(y.len()));
    if opts.beam == 1 {
        greedy_decode(model, x, y, max_len)
    } else {
        beam_decode(model, x, y, opts.beam, max_len, opts.alpha)
    }
}
