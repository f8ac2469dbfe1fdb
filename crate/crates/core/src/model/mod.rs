//! The context-aware multi-source Transformer.
//!
//! Three stacks share one embedding matrix, which also serves as the output
//! projection:
//!
//! * the src encoder: bidirectional self-attention over the source sentence,
//!   producing `x'`;
//! * the mt encoder: causally masked self-attention over the MT output,
//!   followed by cross-attention whose keys and values are the final `x'`,
//!   producing the joint encoding `e`;
//! * the decoder: causal self-attention over the post-edit prefix and
//!   cross-attention over `e`.
//!
//! All sublayers are post-norm: `LayerNorm(H + Dropout(f(H)))`.

mod attention;
mod checkpoint;
mod config;
mod params;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use attention::{attention_mask, multi_head_attention, AttnWeights};
pub use checkpoint::{
    load_checkpoint, peek_config, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use config::{ModelConfig, SourceMode};
pub use params::{AttnParams, FfnParams, LayerParams, NormParams, ParamLayout};

use crate::error::{Error, Result};
use crate::numerics::{Float, Gradients, Tape, Tensor, Var};

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const BOS: usize = 2;
pub const EOS: usize = 3;

/// Layer-norm epsilon used by every sublayer.
pub const LAYER_NORM_EPS: f64 = 1e-6;

/// Model parameters plus the configuration that shapes them.
#[derive(Debug, Clone)]
pub struct Model<T> {
    config: ModelConfig,
    layout: ParamLayout,
    names: Vec<String>,
    params: Vec<Tensor<T>>,
    positions: Tensor<T>,
}

impl<T: Float> Model<T> {
    /// Freshly initialised model. Projections are Xavier-uniform, the
    /// embedding is `N(0, d_model^-0.5)`, norms start at gain 1 / bias 0.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        Self::check_config(&config)?;
        let (layout, specs) = params::layout(&config);
        let params = params::initialise(&specs, config.d_model, seed);
        let names = specs.into_iter().map(|s| s.name).collect();
        let positions = sinusoid_table(config.max_len, config.d_model);
        Ok(Self {
            config,
            layout,
            names,
            params,
            positions,
        })
    }

    /// Rebuilds a model from parameters in canonical order.
    pub fn from_params(config: ModelConfig, params: Vec<Tensor<T>>) -> Result<Self> {
        Self::check_config(&config)?;
        let (layout, specs) = params::layout(&config);
        if specs.len() != params.len() {
            return Err(Error::Contract(format!(
                "expected {} parameter tensors, got {}",
                specs.len(),
                params.len()
            )));
        }
        for (s, p) in specs.iter().zip(&params) {
            if s.shape != p.shape() {
                return Err(Error::dim("parameter", &s.shape, p.shape()));
            }
        }
        let names = specs.into_iter().map(|s| s.name).collect();
        let positions = sinusoid_table(config.max_len, config.d_model);
        Ok(Self {
            config,
            layout,
            names,
            params,
            positions,
        })
    }

    fn check_config(config: &ModelConfig) -> Result<()> {
        config.validate()?;
        if config.float != T::WIDTH {
            return Err(Error::Config(format!(
                "config asks for {:?} but the model element type is {:?}",
                config.float,
                T::WIDTH
            )));
        }
        Ok(())
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn params(&self) -> &[Tensor<T>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor<T>] {
        &mut self.params
    }

    pub fn param_names(&self) -> &[String] {
        &self.names
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    /// The shared `[vocab, d_model]` embedding matrix.
    pub fn embedding(&self) -> &Tensor<T> {
        &self.params[self.layout.embedding]
    }

    pub fn embedding_mut(&mut self) -> &mut Tensor<T> {
        &mut self.params[self.layout.embedding]
    }

    /// The output projection; the same storage as [`Model::embedding`].
    pub fn output_projection(&self) -> &Tensor<T> {
        &self.params[self.layout.embedding]
    }

    /// Fixed sinusoidal position table, `[max_len, d_model]`.
    pub fn positional_table(&self) -> &Tensor<T> {
        &self.positions
    }

    pub fn session(&self, options: SessionOptions) -> Session<'_, T> {
        Session::new(self, options)
    }

    /// Inference session: no dropout, no gradients, attention recorded.
    pub fn eval_session(&self) -> Session<'_, T> {
        Session::new(self, SessionOptions::eval())
    }
}

/// `PE(pos, 2i) = sin(pos / 10000^(2i/d))`, `PE(pos, 2i+1) = cos(..)`.
pub fn sinusoid_table<T: Float>(max_len: usize, d: usize) -> Tensor<T> {
    let mut data = Vec::with_capacity(max_len * d);
    for pos in 0..max_len {
        for j in 0..d {
            let pair = (j / 2 * 2) as f64;
            let angle = pos as f64 / 10000f64.powf(pair / d as f64);
            data.push(T::from_f64(if j % 2 == 0 {
                angle.sin()
            } else {
                angle.cos()
            }));
        }
    }
    Tensor::new(vec![max_len, d], data).expect("table shape")
}

/// A padded `[batch, len]` matrix of token ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeqBatch {
    ids: Vec<usize>,
    batch: usize,
    len: usize,
}

impl SeqBatch {
    /// Right-pads every sequence with PAD to the longest length.
    pub fn new<S: AsRef<[usize]>>(seqs: &[S]) -> Result<Self> {
        let len = seqs.iter().map(|s| s.as_ref().len()).max().unwrap_or(0);
        if seqs.is_empty() || len == 0 {
            return Err(Error::Contract("empty sequence batch".into()));
        }
        let mut ids = Vec::with_capacity(seqs.len() * len);
        for s in seqs {
            let s = s.as_ref();
            ids.extend_from_slice(s);
            ids.extend(std::iter::repeat_n(PAD, len - s.len()));
        }
        Ok(Self {
            ids,
            batch: seqs.len(),
            len,
        })
    }

    pub fn single(ids: &[usize]) -> Result<Self> {
        Self::new(&[ids])
    }

    pub fn from_padded(ids: Vec<usize>, batch: usize, len: usize) -> Result<Self> {
        if batch == 0 || len == 0 || ids.len() != batch * len {
            return Err(Error::dim("SeqBatch", &[ids.len()], &[batch, len]));
        }
        Ok(Self { ids, batch, len })
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn row(&self, b: usize) -> &[usize] {
        &self.ids[b * self.len..(b + 1) * self.len]
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn pad_mask(&self) -> Vec<bool> {
        self.ids.iter().map(|&id| id == PAD).collect()
    }

    pub fn pad_count(&self) -> usize {
        self.ids.iter().filter(|&&id| id == PAD).count()
    }
}

/// What produced a set of hidden states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    /// `x'`: output of the src encoder.
    SrcEncoded,
    /// `e`: mt states jointly encoded with src context.
    JointEncoded,
    /// Output of the plain mt encoder of the mt→pe baseline.
    MtEncoded,
    Decoder,
}

impl Origin {
    fn label(self) -> &'static str {
        match self {
            Origin::SrcEncoded => "src-encoded",
            Origin::JointEncoded => "joint-encoded",
            Origin::MtEncoded => "mt-encoded",
            Origin::Decoder => "decoder",
        }
    }
}

/// `[batch, len, d_model]` states on a session's tape.
#[derive(Debug, Clone)]
pub struct HiddenStates {
    pub var: Var,
    pub origin: Origin,
    pub batch: usize,
    pub len: usize,
    pad: Vec<bool>,
}

impl HiddenStates {
    pub fn pad_mask(&self) -> &[bool] {
        &self.pad
    }
}

/// Where an attention block sits in the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Site {
    SrcSelf,
    MtSelf,
    /// mt queries over src keys: the src–mt alignment.
    MtCross,
    DecSelf,
    DecCross,
}

/// Softmax weights of one attention block, one `[batch, queries, keys]`
/// tensor per head.
#[derive(Debug, Clone)]
pub struct AttentionRecord<T> {
    pub site: Site,
    pub layer: usize,
    pub heads: Vec<Tensor<T>>,
}

impl<T: Float> AttentionRecord<T> {
    /// Head `h`'s `queries × keys` matrix for batch element `b`.
    pub fn matrix(&self, h: usize, b: usize) -> Vec<Vec<T>> {
        let s = self.heads[h].shape();
        let (tq, tk) = (s[1], s[2]);
        let data = &self.heads[h].data()[b * tq * tk..(b + 1) * tq * tk];
        data.chunks(tk).map(<[T]>::to_vec).collect()
    }

    /// Largest deviation of any row sum from one.
    pub fn max_row_error(&self) -> f64 {
        self.heads
            .iter()
            .flat_map(|t| {
                t.rows()
                    .map(|r| (r.iter().map(|v| v.as_f64()).sum::<f64>() - 1.0).abs())
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SessionOptions {
    /// Enables dropout.
    pub train: bool,
    /// Registers parameters as gradient-tracking leaves.
    pub grad: bool,
    /// Copies attention weights into [`AttentionRecord`]s.
    pub record_attention: bool,
    pub seed: u64,
}

impl SessionOptions {
    pub fn eval() -> Self {
        Self {
            train: false,
            grad: false,
            record_attention: true,
            seed: 0,
        }
    }

    pub fn train(seed: u64) -> Self {
        Self {
            train: true,
            grad: true,
            record_attention: false,
            seed,
        }
    }

    /// Gradients without dropout, for deterministic gradient checks.
    pub fn grad_eval() -> Self {
        Self {
            train: false,
            grad: true,
            record_attention: true,
            seed: 0,
        }
    }
}

/// Encoder output consumed by the decoder, whatever the source mode.
#[derive(Debug, Clone)]
pub struct Memory {
    pub states: HiddenStates,
    /// `x'` when a src encoder ran (kept for inspection).
    pub src: Option<HiddenStates>,
}

/// One forward computation: owns a gradient tape over a borrowed model.
pub struct Session<'m, T: Float> {
    model: &'m Model<T>,
    pub tape: Tape<T>,
    vars: Vec<Option<Var>>,
    options: SessionOptions,
    rng: ChaCha8Rng,
}

impl<'m, T: Float> Session<'m, T> {
    pub fn new(model: &'m Model<T>, options: SessionOptions) -> Self {
        Self {
            model,
            tape: Tape::new(),
            vars: vec![None; model.params.len()],
            options,
            rng: ChaCha8Rng::seed_from_u64(options.seed),
        }
    }

    pub fn model(&self) -> &'m Model<T> {
        self.model
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        self.tape.value(v)
    }

    /// Tape handle of parameter `idx`, registered on first use.
    pub fn param(&mut self, idx: usize) -> Var {
        if let Some(v) = self.vars[idx] {
            return v;
        }
        let v = self
            .tape
            .leaf(self.model.params[idx].clone(), self.options.grad);
        self.vars[idx] = Some(v);
        v
    }

    fn attn_weights(&mut self, p: AttnParams) -> AttnWeights {
        AttnWeights {
            query: self.param(p.query),
            key: self.param(p.key),
            value: self.param(p.value),
            output: self.param(p.output),
        }
    }

    /// `E[id]·√d_model + PE(pos)`, then dropout. Output `[batch, len, d]`.
    pub fn embed(&mut self, seq: &SeqBatch) -> Result<Var> {
        let cfg = &self.model.config;
        let (b, t, d) = (seq.batch, seq.len, cfg.d_model);
        if t > cfg.max_len {
            return Err(Error::Contract(format!(
                "sequence length {t} exceeds max_len {}",
                cfg.max_len
            )));
        }
        let table = self.param(self.model.layout.embedding);
        let rows = self.tape.embedding(table, &seq.ids)?;
        let rows = self.tape.reshape(rows, &[b, t, d])?;
        let scaled = self.tape.scale(rows, T::from_f64((d as f64).sqrt()));
        let pe = &self.model.positions.data()[..t * d];
        let mut pos = Vec::with_capacity(b * t * d);
        for _ in 0..b {
            pos.extend_from_slice(pe);
        }
        let pos = self.tape.constant(Tensor::new(vec![b, t, d], pos)?);
        let summed = self.tape.add(scaled, pos)?;
        self.tape
            .dropout(summed, cfg.dropout, self.options.train, &mut self.rng)
    }

    /// Multi-head attention of `query` states over `kv` states with PAD keys
    /// (and, when `causal`, future keys) masked.
    pub fn attention(
        &mut self,
        query: Var,
        kv: Var,
        key_pad: &[bool],
        causal: bool,
        p: AttnParams,
    ) -> Result<(Var, Vec<Var>)> {
        let sq = self.tape.shape(query).to_vec();
        let sk = self.tape.shape(kv).to_vec();
        if key_pad.len() != sk[0] * sk[1] {
            return Err(Error::dim("key padding", &[key_pad.len()], &sk));
        }
        let mask = attention_mask::<T>(sq[0], sq[1], sk[1], key_pad, causal)
            .map(|m| self.tape.constant(m));
        let w = self.attn_weights(p);
        multi_head_attention(
            &mut self.tape,
            query,
            kv,
            kv,
            w,
            self.model.config.n_heads,
            mask,
        )
    }

    /// Residual sublayer `LayerNorm(h + Dropout(f(h)))`.
    pub fn sublayer<F>(&mut self, h: Var, norm: NormParams, f: F) -> Result<Var>
    where
        F: FnOnce(&mut Self, Var) -> Result<Var>,
    {
        let fx = f(self, h)?;
        if self.tape.shape(fx) != self.tape.shape(h) {
            return Err(Error::Contract(format!(
                "sublayer changed shape {:?} -> {:?}",
                self.tape.shape(h),
                self.tape.shape(fx)
            )));
        }
        let p = self.model.config.dropout;
        let fx = self
            .tape
            .dropout(fx, p, self.options.train, &mut self.rng)?;
        let sum = self.tape.add(h, fx)?;
        let gain = self.param(norm.gain);
        let bias = self.param(norm.bias);
        self.tape.layer_norm(sum, gain, bias, LAYER_NORM_EPS)
    }

    /// Position-wise `max(0, h·W1 + b1)·W2 + b2`.
    pub fn feed_forward(&mut self, h: Var, p: FfnParams) -> Result<Var> {
        let (w1, b1, w2, b2) = (
            self.param(p.w1),
            self.param(p.b1),
            self.param(p.w2),
            self.param(p.b2),
        );
        let hidden = self.tape.matmul(h, w1)?;
        let hidden = self.tape.add_bias(hidden, b1)?;
        let hidden = self.tape.relu(hidden);
        let out = self.tape.matmul(hidden, w2)?;
        self.tape.add_bias(out, b2)
    }

    fn record(&self, site: Site, layer: usize, probs: &[Var], out: &mut Vec<AttentionRecord<T>>) {
        if self.options.record_attention {
            out.push(AttentionRecord {
                site,
                layer,
                heads: probs.iter().map(|&p| self.tape.value(p).clone()).collect(),
            });
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn run_layer(
        &mut self,
        h: Var,
        lp: LayerParams,
        self_pad: &[bool],
        causal: bool,
        memory: Option<(Var, &[bool])>,
        sites: (Site, Site),
        layer: usize,
        records: &mut Vec<AttentionRecord<T>>,
    ) -> Result<Var> {
        let mut probs = Vec::new();
        let h = self.sublayer(h, lp.self_norm, |s, h| {
            let (out, p) = s.attention(h, h, self_pad, causal, lp.self_attn)?;
            probs = p;
            Ok(out)
        })?;
        self.record(sites.0, layer, &probs, records);
        let h = match (lp.cross, memory) {
            (Some((cross, norm)), Some((mem, mem_pad))) => {
                let h = self.sublayer(h, norm, |s, h| {
                    let (out, p) = s.attention(h, mem, mem_pad, false, cross)?;
                    probs = p;
                    Ok(out)
                })?;
                self.record(sites.1, layer, &probs, records);
                h
            }
            (None, None) => h,
            _ => {
                return Err(Error::Contract(
                    "layer cross-attention wiring mismatch".into(),
                ))
            }
        };
        self.sublayer(h, lp.ffn_norm, |s, h| s.feed_forward(h, lp.ffn))
    }

    /// src encoder: bidirectional self-attention stack over `x`.
    pub fn encode_src(&mut self, x: &SeqBatch) -> Result<(HiddenStates, Vec<AttentionRecord<T>>)> {
        if self.model.config.mode == SourceMode::MtOnly {
            return Err(Error::Config("the mt-pe model has no src encoder".into()));
        }
        let pad = x.pad_mask();
        let mut h = self.embed(x)?;
        let mut records = Vec::new();
        let model = self.model;
        for (i, &lp) in model.layout.src.iter().enumerate() {
            h = self.run_layer(
                h,
                lp,
                &pad,
                false,
                None,
                (Site::SrcSelf, Site::SrcSelf),
                i,
                &mut records,
            )?;
        }
        Ok((
            HiddenStates {
                var: h,
                origin: Origin::SrcEncoded,
                batch: x.batch,
                len: x.len,
                pad,
            },
            records,
        ))
    }

    /// mt encoder: causal self-attention over `y`, then cross-attention with
    /// queries from the mt states and keys/values from `x'`, in every layer.
    pub fn encode_mt(
        &mut self,
        x_prime: &HiddenStates,
        y: &SeqBatch,
    ) -> Result<(HiddenStates, Vec<AttentionRecord<T>>)> {
        if self.model.config.mode != SourceMode::Multi {
            return Err(Error::Config(
                "only the multi-source model has a joint mt encoder".into(),
            ));
        }
        if x_prime.origin != Origin::SrcEncoded {
            return Err(Error::Wiring {
                expected: Origin::SrcEncoded.label(),
                found: x_prime.origin.label(),
            });
        }
        if x_prime.batch != y.batch {
            return Err(Error::dim("encode_mt batch", &[x_prime.batch], &[y.batch]));
        }
        let pad = y.pad_mask();
        let mut h = self.embed(y)?;
        let mut records = Vec::new();
        let model = self.model;
        for (i, &lp) in model.layout.mt.iter().enumerate() {
            h = self.run_layer(
                h,
                lp,
                &pad,
                true,
                Some((x_prime.var, &x_prime.pad)),
                (Site::MtSelf, Site::MtCross),
                i,
                &mut records,
            )?;
        }
        Ok((
            HiddenStates {
                var: h,
                origin: Origin::JointEncoded,
                batch: y.batch,
                len: y.len,
                pad,
            },
            records,
        ))
    }

    /// Plain bidirectional mt encoder of the mt→pe baseline.
    pub fn encode_mt_only(
        &mut self,
        y: &SeqBatch,
    ) -> Result<(HiddenStates, Vec<AttentionRecord<T>>)> {
        if self.model.config.mode != SourceMode::MtOnly {
            return Err(Error::Config(
                "plain mt encoding needs the mt-pe model".into(),
            ));
        }
        let pad = y.pad_mask();
        let mut h = self.embed(y)?;
        let mut records = Vec::new();
        let model = self.model;
        for (i, &lp) in model.layout.mt.iter().enumerate() {
            h = self.run_layer(
                h,
                lp,
                &pad,
                false,
                None,
                (Site::MtSelf, Site::MtSelf),
                i,
                &mut records,
            )?;
        }
        Ok((
            HiddenStates {
                var: h,
                origin: Origin::MtEncoded,
                batch: y.batch,
                len: y.len,
                pad,
            },
            records,
        ))
    }

    /// Runs whichever encoders the source mode calls for.
    pub fn encode(
        &mut self,
        x: &SeqBatch,
        y: &SeqBatch,
    ) -> Result<(Memory, Vec<AttentionRecord<T>>)> {
        match self.model.config.mode {
            SourceMode::Multi => {
                let (xp, mut records) = self.encode_src(x)?;
                let (e, more) = self.encode_mt(&xp, y)?;
                records.extend(more);
                Ok((
                    Memory {
                        states: e,
                        src: Some(xp),
                    },
                    records,
                ))
            }
            SourceMode::SrcOnly => {
                let (xp, records) = self.encode_src(x)?;
                Ok((
                    Memory {
                        states: xp.clone(),
                        src: Some(xp),
                    },
                    records,
                ))
            }
            SourceMode::MtOnly => {
                let (e, records) = self.encode_mt_only(y)?;
                Ok((
                    Memory {
                        states: e,
                        src: None,
                    },
                    records,
                ))
            }
        }
    }

    fn expected_memory(&self) -> Origin {
        match self.model.config.mode {
            SourceMode::Multi => Origin::JointEncoded,
            SourceMode::SrcOnly => Origin::SrcEncoded,
            SourceMode::MtOnly => Origin::MtEncoded,
        }
    }

    /// Decoder over the pe prefix `z` attending to `memory`; returns
    /// `[batch, len, vocab]` logits computed with the tied embedding.
    pub fn decode(
        &mut self,
        z: &SeqBatch,
        memory: &HiddenStates,
    ) -> Result<(Var, Vec<AttentionRecord<T>>)> {
        let expected = self.expected_memory();
        if memory.origin != expected {
            return Err(Error::Wiring {
                expected: expected.label(),
                found: memory.origin.label(),
            });
        }
        if memory.batch != z.batch {
            return Err(Error::dim("decode batch", &[memory.batch], &[z.batch]));
        }
        let pad = z.pad_mask();
        let mut h = self.embed(z)?;
        let mut records = Vec::new();
        let model = self.model;
        for (i, &lp) in model.layout.dec.iter().enumerate() {
            h = self.run_layer(
                h,
                lp,
                &pad,
                true,
                Some((memory.var, &memory.pad)),
                (Site::DecSelf, Site::DecCross),
                i,
                &mut records,
            )?;
        }
        let table = self.param(self.model.layout.embedding);
        Ok((self.tape.matmul_nt(h, table)?, records))
    }

    /// Full teacher-forced pass: logits for every position of `z_in`.
    pub fn forward(
        &mut self,
        x: &SeqBatch,
        y: &SeqBatch,
        z_in: &SeqBatch,
    ) -> Result<(Var, Vec<AttentionRecord<T>>)> {
        let (memory, mut records) = self.encode(x, y)?;
        let (logits, more) = self.decode(z_in, &memory.states)?;
        records.extend(more);
        Ok((logits, records))
    }

    /// `states` (batch 1) repeated `copies` times along the batch axis as a
    /// constant, for decoding several hypotheses against one encoding.
    /// Gradients do not flow through the copy.
    pub fn tile_states(&mut self, states: &HiddenStates, copies: usize) -> Result<HiddenStates> {
        if states.batch != 1 || copies == 0 {
            return Err(Error::Contract(format!(
                "tile_states needs batch 1 and copies > 0, got {} and {copies}",
                states.batch
            )));
        }
        if copies == 1 {
            return Ok(states.clone());
        }
        let value = self.tape.value(states.var);
        let mut shape = value.shape().to_vec();
        shape[0] = copies;
        let data = value.data().repeat(copies);
        let var = self.tape.constant(Tensor::new(shape, data)?);
        Ok(HiddenStates {
            var,
            origin: states.origin,
            batch: copies,
            len: states.len,
            pad: states.pad.repeat(copies),
        })
    }

    /// Backward pass; returns one gradient per model parameter (zeros for
    /// parameters the loss does not touch).
    pub fn backward(&mut self, loss: Var) -> Result<Vec<Tensor<T>>> {
        if !self.options.grad {
            return Err(Error::Contract(
                "session was created without gradients".into(),
            ));
        }
        let mut grads: Gradients<T> = self.tape.backward(loss)?;
        Ok(self
            .model
            .params
            .iter()
            .zip(&self.vars)
            .map(|(p, v)| {
                v.and_then(|v| grads.take(v))
                    .unwrap_or_else(|| Tensor::zeros(p.shape()))
            })
            .collect())
    }
}
