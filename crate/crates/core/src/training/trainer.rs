use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{make_batches, nll_loss, Batch, Triplet};
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::model::{save_checkpoint, Model, SessionOptions, PAD};
use crate::numerics::{clip_global_norm, lr_schedule, AdamState, Float, Tensor};

/// Optimisation settings for [`train`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub seed: u64,
    /// Upper bound on cells in the padded src + mt + pe matrices of a batch.
    pub token_budget: usize,
    pub warmup: u64,
    pub max_steps: u64,
    /// Dev evaluation period in steps.
    pub eval_interval: u64,
    pub smoothing: f64,
    /// Global gradient-norm ceiling; 0 disables clipping.
    pub clip_norm: f64,
    /// Evaluations without dev-loss improvement before stopping; 0 disables.
    pub patience: usize,
    /// Multiplier on the warmup schedule.
    pub lr_scale: f64,
    /// Newline-delimited JSON evaluation log.
    pub log_path: Option<PathBuf>,
    /// Where the best model so far is written.
    pub checkpoint_path: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            token_budget: 4096,
            warmup: 4000,
            max_steps: 20_000,
            eval_interval: 200,
            smoothing: 0.1,
            clip_norm: 1.0,
            patience: 10,
            lr_scale: 1.0,
            log_path: None,
            checkpoint_path: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.token_budget == 0 {
            return Err(Error::Config("token_budget must be positive".into()));
        }
        if self.warmup == 0 {
            return Err(Error::Config("warmup must be positive".into()));
        }
        if self.eval_interval == 0 {
            return Err(Error::Config("eval_interval must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.smoothing) {
            return Err(Error::Config(format!(
                "smoothing {} outside [0, 1)",
                self.smoothing
            )));
        }
        if self.clip_norm.is_nan()
            || self.clip_norm < 0.0
            || self.lr_scale.is_nan()
            || self.lr_scale <= 0.0
        {
            return Err(Error::Config(
                "clip_norm must be ≥ 0 and lr_scale > 0".into(),
            ));
        }
        Ok(())
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub step: u64,
    pub lr: f64,
    pub train_loss: Option<f64>,
    pub dev_loss: f64,
    pub dev_token_acc: f64,
}

#[derive(Debug, Clone)]
pub struct TrainState<T> {
    pub step: u64,
    pub adam: AdamState<T>,
    pub best_dev_loss: f64,
    pub best_step: u64,
    pub seed: u64,
    /// Exponential moving average of the training loss.
    pub loss_ema: Option<f64>,
    pub history: Vec<EvalRecord>,
    /// Indices of training triplets dropped for exceeding the token budget.
    pub skipped: Vec<usize>,
    pub early_stopped: bool,
}

/// Teacher-forced dev metrics: mean per-token NLL (no smoothing) and
/// argmax accuracy over non-PAD targets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DevMetrics {
    pub loss: f64,
    pub token_acc: f64,
}

fn targets(batch: &Batch) -> &[usize] {
    batch.pe_target.ids()
}

/// Evaluates `model` on pre-built batches.
pub fn evaluate_batches<T: Float>(model: &Model<T>, batches: &[Batch]) -> Result<DevMetrics> {
    let (mut nll, mut correct, mut total) = (0.0, 0usize, 0usize);
    for b in batches {
        let mut s = model.session(SessionOptions {
            record_attention: false,
            ..SessionOptions::eval()
        });
        let (logits, _) = s.forward(&b.src, &b.mt, &b.pe_input)?;
        let value = s.value(logits);
        let v = value.last_dim();
        for (row, &gold) in value.data().chunks(v).zip(targets(b)) {
            if gold == PAD {
                continue;
            }
            nll -= super::log_softmax_at(row, gold);
            if argmax(row) == gold {
                correct += 1;
            }
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::Input("empty evaluation set".into()));
    }
    Ok(DevMetrics {
        loss: nll / total as f64,
        token_acc: correct as f64 / total as f64,
    })
}

pub fn evaluate<T: Float>(
    model: &Model<T>,
    triplets: &[Triplet],
    token_budget: usize,
) -> Result<DevMetrics> {
    let batching = make_batches(triplets, token_budget, 0)?;
    evaluate_batches(model, &batching.batches)
}

/// First index of the largest entry.
pub fn argmax<T: Float>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// One optimisation step on `batch`; returns the pre-update loss.
pub fn train_step<T: Float>(
    model: &mut Model<T>,
    adam: &mut AdamState<T>,
    batch: &Batch,
    step: u64,
    cfg: &TrainConfig,
) -> Result<f64> {
    let session_seed = cfg
        .seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(step);
    let (loss, mut grads) = {
        let mut s = model.session(SessionOptions::train(session_seed));
        let (logits, _) = s.forward(&batch.src, &batch.mt, &batch.pe_input)?;
        let loss = nll_loss(&mut s.tape, logits, targets(batch), cfg.smoothing)?;
        let value = s.value(loss).data()[0].as_f64();
        if !value.is_finite() {
            return Err(Error::Numeric(format!(
                "training loss is {value} at step {step}"
            )));
        }
        (value, s.backward(loss)?)
    };
    if cfg.clip_norm > 0.0 {
        let norm = clip_global_norm(&mut grads, cfg.clip_norm);
        if !norm.is_finite() {
            return Err(Error::Numeric(format!(
                "gradient norm is {norm} at step {step}"
            )));
        }
    }
    let lr = cfg.lr_scale * lr_schedule(step, model.config().d_model, cfg.warmup)?;
    adam.apply(model.params_mut(), &grads, lr)?;
    Ok(loss)
}

/// Trains `model` in place and leaves it holding the parameters with the
/// lowest dev loss seen.
///
/// Dev metrics are computed before the first step and then every
/// `eval_interval` steps. Training ends at `max_steps`, or after `patience`
/// evaluations without improvement. A non-finite loss aborts with
/// [`Error::Numeric`]; any checkpoint already written is left untouched.
pub fn train<T: Float>(
    model: &mut Model<T>,
    vocab: Option<&Vocabulary>,
    train_set: &[Triplet],
    dev_set: &[Triplet],
    cfg: &TrainConfig,
) -> Result<TrainState<T>> {
    cfg.validate()?;
    if train_set.is_empty() || dev_set.is_empty() {
        return Err(Error::Input(
            "training and dev corpora must be non-empty".into(),
        ));
    }
    if cfg.checkpoint_path.is_some() && vocab.is_none() {
        return Err(Error::Config("checkpointing needs the vocabulary".into()));
    }
    let dev_batches = make_batches(dev_set, cfg.token_budget, 0)?.batches;
    let mut log = match &cfg.log_path {
        Some(p) => Some(BufWriter::new(
            File::create(p).map_err(|e| Error::io(p, e))?,
        )),
        None => None,
    };

    let initial = evaluate_batches(model, &dev_batches).map_err(as_numeric)?;
    let mut state = TrainState {
        step: 0,
        adam: AdamState::new(model.params()),
        best_dev_loss: initial.loss,
        best_step: 0,
        seed: cfg.seed,
        loss_ema: None,
        history: Vec::new(),
        skipped: Vec::new(),
        early_stopped: false,
    };
    let mut best: Vec<Tensor<T>> = model.params().to_vec();
    record(&mut state, &mut log, initial, 0.0)?;
    if let (Some(path), Some(v)) = (&cfg.checkpoint_path, vocab) {
        save_checkpoint(model, v, path)?;
    }

    let started = Instant::now();
    let mut stale = 0usize;
    let mut epoch = 0u64;
    'outer: while state.step < cfg.max_steps {
        let batching = make_batches(train_set, cfg.token_budget, cfg.seed.wrapping_add(epoch))?;
        if epoch == 0 {
            state.skipped = batching.skipped.clone();
        }
        if batching.batches.is_empty() {
            return Err(Error::Input(
                "no training triplet fits the token budget".into(),
            ));
        }
        for batch in &batching.batches {
            if state.step >= cfg.max_steps {
                break 'outer;
            }
            state.step += 1;
            let loss =
                train_step(model, &mut state.adam, batch, state.step, cfg).map_err(as_numeric)?;
            state.loss_ema = Some(match state.loss_ema {
                Some(e) => 0.95 * e + 0.05 * loss,
                None => loss,
            });
            if state.step % cfg.eval_interval == 0 {
                let m = evaluate_batches(model, &dev_batches).map_err(as_numeric)?;
                let lr =
                    cfg.lr_scale * lr_schedule(state.step, model.config().d_model, cfg.warmup)?;
                record(&mut state, &mut log, m, lr)?;
                log::info!(
                    "step {} lr {lr:.3e} train {:.4} dev {:.4} acc {:.4} ({:.1}s)",
                    state.step,
                    state.loss_ema.unwrap_or(f64::NAN),
                    m.loss,
                    m.token_acc,
                    started.elapsed().as_secs_f64()
                );
                if m.loss < state.best_dev_loss {
                    state.best_dev_loss = m.loss;
                    state.best_step = state.step;
                    best.clone_from_slice(model.params());
                    stale = 0;
                    if let (Some(path), Some(v)) = (&cfg.checkpoint_path, vocab) {
                        save_checkpoint(model, v, path)?;
                    }
                } else {
                    stale += 1;
                    if cfg.patience > 0 && stale >= cfg.patience {
                        state.early_stopped = true;
                        break 'outer;
                    }
                }
            }
        }
        epoch += 1;
    }
    model.params_mut().clone_from_slice(&best);
    if let Some(w) = &mut log {
        w.flush()
            .map_err(|e| Error::io(cfg.log_path.clone().unwrap_or_default(), e))?;
    }
    Ok(state)
}

/// A softmax row without finite entries means the weights have diverged.
fn as_numeric(e: Error) -> Error {
    match e {
        Error::DegenerateRow { .. } => Error::Numeric(e.to_string()),
        e => e,
    }
}

fn record<T, W: Write>(
    state: &mut TrainState<T>,
    log: &mut Option<W>,
    m: DevMetrics,
    lr: f64,
) -> Result<()> {
    let rec = EvalRecord {
        step: state.step,
        lr,
        train_loss: state.loss_ema,
        dev_loss: m.loss,
        dev_token_acc: m.token_acc,
    };
    if let Some(w) = log {
        let line = serde_json::to_string(&rec).map_err(|e| Error::Input(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| Error::io("training log", e))?;
    }
    state.history.push(rec);
    Ok(())
}
