use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelConfig, SourceMode};
use crate::numerics::FloatWidth;
use crate::training::TrainConfig;

/// Flat JSON run description read by `ape train`. Every field has a
/// default; unknown keys are rejected.
///
/// | key | default | range |
/// |---|---|---|
/// | `d_model` | 64 | multiple of `n_heads` |
/// | `n_heads` | 4 | ≥ 1 |
/// | `n_layers` | 2 | ≥ 0 |
/// | `d_ff` | 256 | ≥ 1 |
/// | `dropout` | 0.1 | [0, 1) |
/// | `max_len` | 256 | ≥ 1 |
/// | `float` | `"f32"` | `"f32"`, `"f64"` |
/// | `mode` | `"multi"` | `"multi"`, `"src-pe"`, `"mt-pe"` |
/// | `seed` | 1 | |
/// | `token_budget` | 4096 | ≥ 1 |
/// | `warmup` | 4000 | ≥ 1 |
/// | `max_steps` | 20000 | |
/// | `eval_interval` | 200 | ≥ 1 |
/// | `smoothing` | 0.1 | [0, 1) |
/// | `clip_norm` | 1.0 | ≥ 0, 0 = off |
/// | `patience` | 10 | 0 = off |
/// | `lr_scale` | 1.0 | > 0 |
/// | `beam` | 4 | ≥ 1 |
/// | `alpha` | 0.6 | ≥ 0 |
/// | `max_vocab` | 32000 | ≥ 5 |
/// | `min_freq` | 1 | |
/// | `train_dir` | `"data/train"` | holds `src.txt`, `mt.txt`, `pe.txt` |
/// | `dev_dir` | `"data/dev"` | same layout |
/// | `vocab` | none | vocabulary file; built from `train_dir` when absent |
/// | `out_dir` | `"run"` | receives `model.ckpt`, `vocab.txt`, `train_log.jsonl` |
///
/// Relative paths are resolved against the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub d_model: usize,
    pub n_heads: usize,
    pub n_layers: usize,
    pub d_ff: usize,
    pub dropout: f64,
    pub max_len: usize,
    pub float: FloatWidth,
    pub mode: SourceMode,
    pub seed: u64,
    pub token_budget: usize,
    pub warmup: u64,
    pub max_steps: u64,
    pub eval_interval: u64,
    pub smoothing: f64,
    pub clip_norm: f64,
    pub patience: usize,
    pub lr_scale: f64,
    pub beam: usize,
    pub alpha: f64,
    pub max_vocab: usize,
    pub min_freq: usize,
    pub train_dir: PathBuf,
    pub dev_dir: PathBuf,
    pub vocab: Option<PathBuf>,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let m = ModelConfig::desk(5);
        let t = TrainConfig::default();
        Self {
            d_model: m.d_model,
            n_heads: m.n_heads,
            n_layers: m.n_layers,
            d_ff: m.d_ff,
            dropout: m.dropout,
            max_len: m.max_len,
            float: m.float,
            mode: m.mode,
            seed: t.seed,
            token_budget: t.token_budget,
            warmup: t.warmup,
            max_steps: t.max_steps,
            eval_interval: t.eval_interval,
            smoothing: t.smoothing,
            clip_norm: t.clip_norm,
            patience: t.patience,
            lr_scale: t.lr_scale,
            beam: 4,
            alpha: 0.6,
            max_vocab: 32_000,
            min_freq: 1,
            train_dir: "data/train".into(),
            dev_dir: "data/dev".into(),
            vocab: None,
            out_dir: "run".into(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file and resolves its relative paths against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        if let Some(base) = path.parent() {
            let fix = |p: &mut PathBuf| {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            };
            fix(&mut cfg.train_dir);
            fix(&mut cfg.dev_dir);
            fix(&mut cfg.out_dir);
            if let Some(v) = cfg.vocab.as_mut() {
                fix(v);
            }
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        self.model_config(5).validate()?;
        self.train_config().validate()?;
        if self.beam == 0 {
            return Err(Error::Config("beam must be at least 1".into()));
        }
        if self.alpha.is_nan() || self.alpha < 0.0 {
            return Err(Error::Config(format!("alpha {} must be ≥ 0", self.alpha)));
        }
        if self.max_vocab < 5 {
            return Err(Error::Config(format!("max_vocab {} < 5", self.max_vocab)));
        }
        Ok(())
    }

    pub fn model_config(&self, vocab_size: usize) -> ModelConfig {
        ModelConfig {
            d_model: self.d_model,
            n_heads: self.n_heads,
            n_layers: self.n_layers,
            d_ff: self.d_ff,
            vocab_size,
            dropout: self.dropout,
            max_len: self.max_len,
            float: self.float,
            mode: self.mode,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            token_budget: self.token_budget,
            warmup: self.warmup,
            max_steps: self.max_steps,
            eval_interval: self.eval_interval,
            smoothing: self.smoothing,
            clip_norm: self.clip_norm,
            patience: self.patience,
            lr_scale: self.lr_scale,
            log_path: Some(self.out_dir.join("train_log.jsonl")),
            checkpoint_path: Some(self.out_dir.join("model.ckpt")),
        }
    }
}
