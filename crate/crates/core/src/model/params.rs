use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::config::{ModelConfig, SourceMode};
use crate::numerics::{Float, Tensor};

/// Indices of one multi-head attention block's projections.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttnParams {
    pub query: usize,
    pub key: usize,
    pub value: usize,
    pub output: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NormParams {
    pub gain: usize,
    pub bias: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FfnParams {
    pub w1: usize,
    pub b1: usize,
    pub w2: usize,
    pub b2: usize,
}

/// One layer of any stack: self-attention, optional cross-attention, then
/// the position-wise feed-forward network, each followed by its own norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerParams {
    pub self_attn: AttnParams,
    pub self_norm: NormParams,
    pub cross: Option<(AttnParams, NormParams)>,
    pub ffn: FfnParams,
    pub ffn_norm: NormParams,
}

/// Where each parameter lives in the flat parameter list.
///
/// Canonical order (also the checkpoint order): the shared embedding, then
/// every src-encoder layer, every mt-encoder layer, every decoder layer.
/// Within a layer: self-attention Q, K, V, O, its norm gain and bias, the
/// cross-attention block and its norm when present, then W1, b1, W2, b2 and
/// the feed-forward norm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamLayout {
    pub embedding: usize,
    pub src: Vec<LayerParams>,
    pub mt: Vec<LayerParams>,
    pub dec: Vec<LayerParams>,
}

pub(crate) struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub init: Init,
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Init {
    Xavier,
    Embedding,
    Zeros,
    Ones,
}

struct Builder {
    specs: Vec<ParamSpec>,
}

impl Builder {
    fn add(&mut self, name: String, shape: Vec<usize>, init: Init) -> usize {
        self.specs.push(ParamSpec { name, shape, init });
        self.specs.len() - 1
    }

    fn attn(&mut self, prefix: &str, d: usize) -> AttnParams {
        AttnParams {
            query: self.add(format!("{prefix}.w_q"), vec![d, d], Init::Xavier),
            key: self.add(format!("{prefix}.w_k"), vec![d, d], Init::Xavier),
            value: self.add(format!("{prefix}.w_v"), vec![d, d], Init::Xavier),
            output: self.add(format!("{prefix}.w_o"), vec![d, d], Init::Xavier),
        }
    }

    fn norm(&mut self, prefix: &str, d: usize) -> NormParams {
        NormParams {
            gain: self.add(format!("{prefix}.gain"), vec![d], Init::Ones),
            bias: self.add(format!("{prefix}.bias"), vec![d], Init::Zeros),
        }
    }

    fn layer(&mut self, prefix: &str, cfg: &ModelConfig, cross: bool) -> LayerParams {
        let d = cfg.d_model;
        let self_attn = self.attn(&format!("{prefix}.self_attn"), d);
        let self_norm = self.norm(&format!("{prefix}.self_norm"), d);
        let cross = cross.then(|| {
            (
                self.attn(&format!("{prefix}.cross_attn"), d),
                self.norm(&format!("{prefix}.cross_norm"), d),
            )
        });
        let ffn = FfnParams {
            w1: self.add(format!("{prefix}.ffn.w1"), vec![d, cfg.d_ff], Init::Xavier),
            b1: self.add(format!("{prefix}.ffn.b1"), vec![cfg.d_ff], Init::Zeros),
            w2: self.add(format!("{prefix}.ffn.w2"), vec![cfg.d_ff, d], Init::Xavier),
            b2: self.add(format!("{prefix}.ffn.b2"), vec![d], Init::Zeros),
        };
        let ffn_norm = self.norm(&format!("{prefix}.ffn_norm"), d);
        LayerParams {
            self_attn,
            self_norm,
            cross,
            ffn,
            ffn_norm,
        }
    }
}

pub(crate) fn layout(cfg: &ModelConfig) -> (ParamLayout, Vec<ParamSpec>) {
    let mut b = Builder { specs: Vec::new() };
    let embedding = b.add(
        "embedding".into(),
        vec![cfg.vocab_size, cfg.d_model],
        Init::Embedding,
    );
    let n = cfg.n_layers;
    let src = match cfg.mode {
        SourceMode::MtOnly => Vec::new(),
        _ => (0..n)
            .map(|i| b.layer(&format!("src.{i}"), cfg, false))
            .collect(),
    };
    let mt = match cfg.mode {
        SourceMode::Multi => (0..n)
            .map(|i| b.layer(&format!("mt.{i}"), cfg, true))
            .collect(),
        SourceMode::MtOnly => (0..n)
            .map(|i| b.layer(&format!("mt.{i}"), cfg, false))
            .collect(),
        SourceMode::SrcOnly => Vec::new(),
    };
    let dec = (0..n)
        .map(|i| b.layer(&format!("dec.{i}"), cfg, true))
        .collect();
    (
        ParamLayout {
            embedding,
            src,
            mt,
            dec,
        },
        b.specs,
    )
}

pub(crate) fn initialise<T: Float>(
    specs: &[ParamSpec],
    d_model: usize,
    seed: u64,
) -> Vec<Tensor<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, (d_model as f64).powf(-0.5)).expect("valid std");
    specs
        .iter()
        .map(|spec| {
            let n: usize = spec.shape.iter().product();
            let data: Vec<T> = match spec.init {
                Init::Zeros => vec![T::zero(); n],
                Init::Ones => vec![T::one(); n],
                Init::Embedding => (0..n)
                    .map(|_| T::from_f64(normal.sample(&mut rng)))
                    .collect(),
                Init::Xavier => {
                    let (fan_in, fan_out) = (spec.shape[0], spec.shape[1]);
                    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                    (0..n)
                        .map(|_| T::from_f64(rng.random_range(-limit..limit)))
                        .collect()
                }
            };
            Tensor::new(spec.shape.clone(), data).expect("spec shape")
        })
        .collect()
}
