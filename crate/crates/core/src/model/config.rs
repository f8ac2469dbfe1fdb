use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::FloatWidth;

/// Which sources the model encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum SourceMode {
    /// src encoder feeding a cross-attending mt encoder, then the decoder.
    #[default]
    #[serde(rename = "multi")]
    Multi,
    /// Single-source baseline: the decoder attends to the src encoding.
    #[serde(rename = "src-pe", alias = "src->pe")]
    SrcOnly,
    /// Single-source baseline: plain bidirectional mt encoder, no src input.
    #[serde(rename = "mt-pe", alias = "mt->pe")]
    MtOnly,
}

impl std::str::FromStr for SourceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multi" => Ok(Self::Multi),
            "src-pe" | "src->pe" => Ok(Self::SrcOnly),
            "mt-pe" | "mt->pe" => Ok(Self::MtOnly),
            other => Err(Error::Config(format!(
                "unknown mode {other:?} (expected multi, src-pe or mt-pe)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub d_model: usize,
    pub n_heads: usize,
    /// Layers per stack (src encoder, mt encoder and decoder each).
    pub n_layers: usize,
    pub d_ff: usize,
    pub vocab_size: usize,
    pub dropout: f64,
    /// Longest sequence the positional table covers.
    pub max_len: usize,
    #[serde(default)]
    pub float: FloatWidth,
    #[serde(default)]
    pub mode: SourceMode,
}

impl ModelConfig {
    /// 2 layers, d_model 64, 4 heads, d_ff 256, dropout 0.1.
    pub fn desk(vocab_size: usize) -> Self {
        Self {
            d_model: 64,
            n_heads: 4,
            n_layers: 2,
            d_ff: 256,
            vocab_size,
            dropout: 0.1,
            max_len: 256,
            float: FloatWidth::F32,
            mode: SourceMode::Multi,
        }
    }

    /// The 6 / 512 / 8 / 2048 base Transformer sizes.
    pub fn base(vocab_size: usize) -> Self {
        Self {
            d_model: 512,
            n_heads: 8,
            n_layers: 6,
            d_ff: 2048,
            vocab_size,
            dropout: 0.1,
            max_len: 512,
            float: FloatWidth::F32,
            mode: SourceMode::Multi,
        }
    }

    pub fn with_mode(mut self, mode: SourceMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n_heads == 0 || self.d_model == 0 || !self.d_model.is_multiple_of(self.n_heads) {
            return fail(format!(
                "d_model {} must be a positive multiple of n_heads {}",
                self.d_model, self.n_heads
            ));
        }
        if self.d_model < 2 {
            return fail("d_model must be at least 2".into());
        }
        if self.vocab_size < 5 {
            return fail(format!("vocab_size {} < 5", self.vocab_size));
        }
        if self.d_ff == 0 || self.max_len == 0 {
            return fail("d_ff and max_len must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail(format!("dropout {} outside [0, 1)", self.dropout));
        }
        Ok(())
    }

    /// Closed-form parameter count.
    ///
    /// Attention sublayers carry four bias-free `d × d` projections, feed-forward
    /// sublayers two weight matrices with biases, and every sublayer one
    /// layer norm (`2d`). The embedding matrix doubles as output projection.
    pub fn param_count(&self) -> usize {
        let d = self.d_model;
        let attn = 4 * d * d + 2 * d;
        let ffn = 2 * d * self.d_ff + self.d_ff + d + 2 * d;
        let plain_layer = attn + ffn;
        let cross_layer = 2 * attn + ffn;
        let stacks = match self.mode {
            SourceMode::Multi => plain_layer + 2 * cross_layer,
            SourceMode::SrcOnly | SourceMode::MtOnly => plain_layer + cross_layer,
        };
        self.vocab_size * d + self.n_layers * stacks
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_catches_bad_shapes() {
        assert!(ModelConfig::desk(10).validate().is_ok());
        let mut c = ModelConfig::desk(10);
        c.n_heads = 3;
        assert!(c.validate().is_err());
        assert!(ModelConfig::desk(4).validate().is_err());
        let mut c = ModelConfig::desk(10);
        c.dropout = 1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("mt->pe".parse::<SourceMode>().unwrap(), SourceMode::MtOnly);
        assert_eq!("src-pe".parse::<SourceMode>().unwrap(), SourceMode::SrcOnly);
        assert!("both".parse::<SourceMode>().is_err());
    }
}
