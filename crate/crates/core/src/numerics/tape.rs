//! Reverse-mode automatic differentiation over a linear operation record.
//!
//! Operations can only reference values already on the tape, so execution
//! order is a topological order and the backward sweep simply walks the
//! record in reverse. A tape supports exactly one backward pass.

use rand::Rng;

use super::kernels::{gemm_nn, gemm_nt, gemm_tn};
use super::{Float, Tensor};
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op<T> {
    Leaf,
    MatMul {
        a: Var,
        b: Var,
    },
    MatMulNt {
        a: Var,
        b: Var,
    },
    BatchMatMul {
        a: Var,
        b: Var,
        trans_b: bool,
    },
    Add {
        a: Var,
        b: Var,
    },
    Mul {
        a: Var,
        b: Var,
    },
    AddBias {
        a: Var,
        bias: Var,
    },
    Scale {
        a: Var,
        factor: T,
    },
    Relu {
        a: Var,
    },
    Softmax {
        a: Var,
    },
    LayerNorm {
        x: Var,
        gain: Var,
        bias: Var,
        xhat: Vec<T>,
        rstd: Vec<T>,
    },
    Embedding {
        table: Var,
        ids: Vec<usize>,
    },
    Dropout {
        a: Var,
        mask: Vec<T>,
    },
    ConcatLast {
        parts: Vec<Var>,
    },
    SliceLast {
        a: Var,
        start: usize,
    },
    Reshape {
        a: Var,
    },
    Sum {
        a: Var,
    },
    CrossEntropy {
        logits: Var,
        probs: Vec<T>,
        targets: Vec<Option<Vec<(usize, T)>>>,
        count: usize,
    },
}

#[derive(Debug)]
struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    requires_grad: bool,
}

/// Gradients produced by [`Tape::backward`], indexed by [`Var`].
#[derive(Debug)]
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Float> Gradients<T> {
    /// Gradient of the loss with respect to `var`; `None` when the loss does
    /// not depend on it or it does not require gradients.
    pub fn get(&self, var: Var) -> Option<&Tensor<T>> {
        self.grads.get(var.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, var: Var) -> Option<Tensor<T>> {
        self.grads.get_mut(var.0).and_then(Option::take)
    }
}

/// Smoothing target for [`Tape::cross_entropy`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Smoothing {
    pub epsilon: f64,
    /// Class that never receives target mass and whose rows are skipped.
    pub ignore: Option<usize>,
}

#[derive(Debug, Default)]
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
    consumed: bool,
}

impl<T: Float> Tape<T> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            consumed: false,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// Registers an input. Leaves with `requires_grad` receive gradients.
    pub fn leaf(&mut self, value: Tensor<T>, requires_grad: bool) -> Var {
        self.push(value, Op::Leaf, requires_grad)
    }

    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.leaf(value, false)
    }

    fn rg(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// `a[.., k] · b[k, n]`, treating all leading axes of `a` as rows.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.is_empty() || sb.len() != 2 || sa[sa.len() - 1] != sb[0] {
            return Err(Error::dim("matmul", sa, sb));
        }
        let (k, n) = (sb[0], sb[1]);
        let m = self.value(a).len() / k.max(1);
        let mut shape = sa[..sa.len() - 1].to_vec();
        shape.push(n);
        let mut out = vec![T::zero(); m * n];
        gemm_nn(
            self.value(a).data(),
            self.value(b).data(),
            &mut out,
            m,
            k,
            n,
        );
        let rg = self.rg(&[a, b]);
        Ok(self.push(Tensor::new(shape, out)?, Op::MatMul { a, b }, rg))
    }

    /// `a[.., k] · b[n, k]ᵀ`.
    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.is_empty() || sb.len() != 2 || sa[sa.len() - 1] != sb[1] {
            return Err(Error::dim("matmul_nt", sa, sb));
        }
        let (n, k) = (sb[0], sb[1]);
        let m = self.value(a).len() / k.max(1);
        let mut shape = sa[..sa.len() - 1].to_vec();
        shape.push(n);
        let mut out = vec![T::zero(); m * n];
        gemm_nt(
            self.value(a).data(),
            self.value(b).data(),
            &mut out,
            m,
            k,
            n,
        );
        let rg = self.rg(&[a, b]);
        Ok(self.push(Tensor::new(shape, out)?, Op::MatMulNt { a, b }, rg))
    }

    /// Batched product of `[B, m, k]` with `[B, k, n]` (or `[B, n, k]` when
    /// `trans_b`).
    pub fn batch_matmul(&mut self, a: Var, b: Var, trans_b: bool) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        let ok = sa.len() == 3
            && sb.len() == 3
            && sa[0] == sb[0]
            && if trans_b {
                sa[2] == sb[2]
            } else {
                sa[2] == sb[1]
            };
        if !ok {
            return Err(Error::dim("batch_matmul", sa, sb));
        }
        let (bsz, m, k) = (sa[0], sa[1], sa[2]);
        let n = if trans_b { sb[1] } else { sb[2] };
        let mut out = vec![T::zero(); bsz * m * n];
        let (ad, bd) = (self.value(a).data(), self.value(b).data());
        for i in 0..bsz {
            let ai = &ad[i * m * k..(i + 1) * m * k];
            let bi = &bd[i * k * n..(i + 1) * k * n];
            let oi = &mut out[i * m * n..(i + 1) * m * n];
            if trans_b {
                gemm_nt(ai, bi, oi, m, k, n);
            } else {
                gemm_nn(ai, bi, oi, m, k, n);
            }
        }
        let rg = self.rg(&[a, b]);
        Ok(self.push(
            Tensor::new(vec![bsz, m, n], out)?,
            Op::BatchMatMul { a, b, trans_b },
            rg,
        ))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::dim("add", self.shape(a), self.shape(b)));
        }
        let out: Vec<T> = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(&x, &y)| x + y)
            .collect();
        let shape = self.shape(a).to_vec();
        let rg = self.rg(&[a, b]);
        Ok(self.push(Tensor::new(shape, out)?, Op::Add { a, b }, rg))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::dim("mul", self.shape(a), self.shape(b)));
        }
        let out: Vec<T> = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(&x, &y)| x * y)
            .collect();
        let shape = self.shape(a).to_vec();
        let rg = self.rg(&[a, b]);
        Ok(self.push(Tensor::new(shape, out)?, Op::Mul { a, b }, rg))
    }

    /// Adds a `[n]` vector to every row of `a[.., n]`.
    pub fn add_bias(&mut self, a: Var, bias: Var) -> Result<Var> {
        let n = self.value(a).last_dim();
        if self.shape(bias) != [n] {
            return Err(Error::dim("add_bias", self.shape(a), self.shape(bias)));
        }
        let b = self.value(bias).data();
        let out: Vec<T> = self
            .value(a)
            .data()
            .chunks(n)
            .flat_map(|row| row.iter().zip(b).map(|(&x, &y)| x + y))
            .collect();
        let shape = self.shape(a).to_vec();
        let rg = self.rg(&[a, bias]);
        Ok(self.push(Tensor::new(shape, out)?, Op::AddBias { a, bias }, rg))
    }

    pub fn scale(&mut self, a: Var, factor: T) -> Var {
        let value = self.value(a);
        let out = value.data().iter().map(|&x| x * factor).collect();
        let shape = value.shape().to_vec();
        let rg = self.rg(&[a]);
        self.push(
            Tensor::new(shape, out).expect("same shape"),
            Op::Scale { a, factor },
            rg,
        )
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let value = self.value(a);
        let out = value.data().iter().map(|&x| x.max(T::zero())).collect();
        let shape = value.shape().to_vec();
        let rg = self.rg(&[a]);
        self.push(
            Tensor::new(shape, out).expect("same shape"),
            Op::Relu { a },
            rg,
        )
    }

    /// Row-wise softmax over the last axis, stabilised by subtracting the row
    /// maximum. `-inf` entries map to exactly zero.
    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        let value = self.value(a);
        let n = value.last_dim();
        let mut out = Vec::with_capacity(value.len());
        for (r, row) in value.data().chunks(n).enumerate() {
            let max = row.iter().copied().fold(T::neg_infinity(), T::max);
            if !max.is_finite() {
                return Err(Error::DegenerateRow { row: r });
            }
            let start = out.len();
            out.extend(row.iter().map(|&x| (x - max).exp()));
            let total: T = out[start..].iter().copied().sum();
            out[start..].iter_mut().for_each(|e| *e /= total);
        }
        let shape = value.shape().to_vec();
        let rg = self.rg(&[a]);
        Ok(self.push(Tensor::new(shape, out)?, Op::Softmax { a }, rg))
    }

    /// Normalises every row of `x[.., d]` to zero mean and unit variance, then
    /// applies `gain` and `bias`.
    pub fn layer_norm(&mut self, x: Var, gain: Var, bias: Var, eps: f64) -> Result<Var> {
        let d = self.value(x).last_dim();
        if d < 2 {
            return Err(Error::Contract(format!("layer_norm needs d >= 2, got {d}")));
        }
        if self.shape(gain) != [d] || self.shape(bias) != [d] {
            return Err(Error::dim("layer_norm", self.shape(x), self.shape(gain)));
        }
        let eps = T::from_f64(eps);
        let dn = T::from_f64(d as f64);
        let (g, b) = (self.value(gain).data(), self.value(bias).data());
        let value = self.value(x);
        let rows = value.len() / d;
        let mut xhat = Vec::with_capacity(value.len());
        let mut rstd = Vec::with_capacity(rows);
        let mut out = Vec::with_capacity(value.len());
        for row in value.data().chunks(d) {
            let mean = row.iter().copied().sum::<T>() / dn;
            let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / dn;
            let rs = T::one() / (var + eps).sqrt();
            rstd.push(rs);
            for (j, &v) in row.iter().enumerate() {
                let xh = (v - mean) * rs;
                xhat.push(xh);
                out.push(xh * g[j] + b[j]);
            }
        }
        let shape = value.shape().to_vec();
        let rg = self.rg(&[x, gain, bias]);
        Ok(self.push(
            Tensor::new(shape, out)?,
            Op::LayerNorm {
                x,
                gain,
                bias,
                xhat,
                rstd,
            },
            rg,
        ))
    }

    /// Gathers rows of `table[V, d]`; output is `[ids.len(), d]`.
    pub fn embedding(&mut self, table: Var, ids: &[usize]) -> Result<Var> {
        let st = self.shape(table);
        if st.len() != 2 {
            return Err(Error::dim("embedding", st, &[]));
        }
        let (vocab, d) = (st[0], st[1]);
        let t = self.value(table).data();
        let mut out = Vec::with_capacity(ids.len() * d);
        for &id in ids {
            if id >= vocab {
                return Err(Error::Vocabulary { id, size: vocab });
            }
            out.extend_from_slice(&t[id * d..(id + 1) * d]);
        }
        let rg = self.rg(&[table]);
        Ok(self.push(
            Tensor::new(vec![ids.len(), d], out)?,
            Op::Embedding {
                table,
                ids: ids.to_vec(),
            },
            rg,
        ))
    }

    /// Inverted dropout. Identity (the same handle) unless `train` and `p > 0`.
    pub fn dropout<R: Rng + ?Sized>(
        &mut self,
        a: Var,
        p: f64,
        train: bool,
        rng: &mut R,
    ) -> Result<Var> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::Contract(format!(
                "dropout probability {p} outside [0, 1)"
            )));
        }
        if !train || p == 0.0 {
            return Ok(a);
        }
        let keep = T::from_f64(1.0 / (1.0 - p));
        let value = self.value(a);
        let mask: Vec<T> = (0..value.len())
            .map(|_| {
                if rng.random::<f64>() < p {
                    T::zero()
                } else {
                    keep
                }
            })
            .collect();
        let out = value
            .data()
            .iter()
            .zip(&mask)
            .map(|(&x, &m)| x * m)
            .collect();
        let shape = value.shape().to_vec();
        let rg = self.rg(&[a]);
        Ok(self.push(Tensor::new(shape, out)?, Op::Dropout { a, mask }, rg))
    }

    pub fn concat_last(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Contract("concat of zero tensors".into()))?;
        let lead = self.shape(*first)[..self.shape(*first).len() - 1].to_vec();
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let s = self.shape(p);
            if s.len() != lead.len() + 1 || s[..lead.len()] != lead[..] {
                return Err(Error::dim("concat_last", self.shape(*first), s));
            }
            widths.push(s[s.len() - 1]);
        }
        let total: usize = widths.iter().sum();
        let rows: usize = lead.iter().product();
        let mut out = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for (&p, &w) in parts.iter().zip(&widths) {
                out.extend_from_slice(&self.value(p).data()[r * w..(r + 1) * w]);
            }
        }
        let mut shape = lead;
        shape.push(total);
        let rg = self.rg(parts);
        Ok(self.push(
            Tensor::new(shape, out)?,
            Op::ConcatLast {
                parts: parts.to_vec(),
            },
            rg,
        ))
    }

    /// Columns `start..start + len` of the last axis.
    pub fn slice_last(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let w = self.value(a).last_dim();
        if start + len > w {
            return Err(Error::dim("slice_last", self.shape(a), &[start, len]));
        }
        let out: Vec<T> = self
            .value(a)
            .data()
            .chunks(w)
            .flat_map(|row| row[start..start + len].iter().copied())
            .collect();
        let mut shape = self.shape(a).to_vec();
        *shape.last_mut().expect("non-scalar") = len;
        let rg = self.rg(&[a]);
        Ok(self.push(Tensor::new(shape, out)?, Op::SliceLast { a, start }, rg))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let value = self.value(a).clone().reshape(shape)?;
        let rg = self.rg(&[a]);
        Ok(self.push(value, Op::Reshape { a }, rg))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let total: T = self.value(a).data().iter().copied().sum();
        let rg = self.rg(&[a]);
        self.push(Tensor::scalar(total), Op::Sum { a }, rg)
    }

    /// Mean over scored rows of the smoothed cross-entropy between a target
    /// distribution and `softmax(logits)`, measured as KL divergence.
    ///
    /// The gold class receives `1 - epsilon`; the remaining mass is spread
    /// evenly over every other class except `smoothing.ignore`. Rows whose
    /// target equals `smoothing.ignore` are skipped. Per-row losses are summed
    /// in sorted order so the result does not depend on row order.
    pub fn cross_entropy(
        &mut self,
        logits: Var,
        targets: &[usize],
        smoothing: Smoothing,
    ) -> Result<Var> {
        let value = self.value(logits);
        let v = value.last_dim();
        let rows = value.len() / v.max(1);
        if targets.len() != rows {
            return Err(Error::dim("cross_entropy", value.shape(), &[targets.len()]));
        }
        let eps = smoothing.epsilon;
        if !(0.0..1.0).contains(&eps) {
            return Err(Error::Contract(format!("smoothing {eps} outside [0, 1)")));
        }
        let mut probs = Vec::with_capacity(value.len());
        let mut dists = Vec::with_capacity(rows);
        let mut losses = Vec::new();
        for (row, &gold) in value.data().chunks(v).zip(targets) {
            if gold >= v {
                return Err(Error::Vocabulary { id: gold, size: v });
            }
            let max = row.iter().copied().fold(T::neg_infinity(), T::max);
            let lse = max + row.iter().map(|&x| (x - max).exp()).sum::<T>().ln();
            probs.extend(row.iter().map(|&x| (x - lse).exp()));
            if smoothing.ignore == Some(gold) {
                dists.push(None);
                continue;
            }
            let others = v - 1 - usize::from(smoothing.ignore.is_some_and(|i| i < v));
            let mut q = vec![(gold, T::from_f64(1.0 - eps))];
            if eps > 0.0 && others > 0 {
                let share = T::from_f64(eps / others as f64);
                q.extend(
                    (0..v)
                        .filter(|&c| c != gold && Some(c) != smoothing.ignore)
                        .map(|c| (c, share)),
                );
            }
            let loss: T = q
                .iter()
                .filter(|(_, w)| *w > T::zero())
                .map(|&(c, w)| w * (w.ln() - (row[c] - lse)))
                .sum();
            losses.push(loss);
            dists.push(Some(q));
        }
        let count = losses.len();
        if count == 0 {
            return Err(Error::Contract(
                "cross_entropy: every target is ignored".into(),
            ));
        }
        losses.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        let total: T = losses.into_iter().sum();
        let mean = total / T::from_f64(count as f64);
        let rg = self.rg(&[logits]);
        Ok(self.push(
            Tensor::scalar(mean),
            Op::CrossEntropy {
                logits,
                probs,
                targets: dists,
                count,
            },
            rg,
        ))
    }

    /// Backpropagates from a scalar `loss`. A tape can be swept only once.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients<T>> {
        if self.consumed {
            return Err(Error::GraphConsumed);
        }
        if self.value(loss).len() != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.shape(loss)
            )));
        }
        self.consumed = true;
        let mut grads: Vec<Option<Vec<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(vec![T::one()]);

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            self.propagate(node, &g, &mut grads);
            if matches!(node.op, Op::Leaf) {
                grads[idx] = Some(g);
            }
        }

        let grads = grads
            .into_iter()
            .zip(&self.nodes)
            .map(|(g, node)| match (g, &node.op) {
                (Some(g), Op::Leaf) if node.requires_grad => {
                    Some(Tensor::new(node.value.shape().to_vec(), g).expect("grad shape"))
                }
                _ => None,
            })
            .collect();
        Ok(Gradients { grads })
    }

    fn propagate(&self, node: &Node<T>, g: &[T], grads: &mut [Option<Vec<T>>]) {
        let val = |v: Var| self.nodes[v.0].value.data();
        let wants = |v: Var| self.nodes[v.0].requires_grad;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul { a, b } => {
                let sb = self.shape(*b);
                let (k, n) = (sb[0], sb[1]);
                let m = g.len() / n.max(1);
                if wants(*a) {
                    let ga = acc(grads, *a, m * k);
                    gemm_nt(g, val(*b), ga, m, n, k);
                }
                if wants(*b) {
                    let gb = acc(grads, *b, k * n);
                    gemm_tn(val(*a), g, gb, k, m, n);
                }
            }
            Op::MatMulNt { a, b } => {
                let sb = self.shape(*b);
                let (n, k) = (sb[0], sb[1]);
                let m = g.len() / n.max(1);
                if wants(*a) {
                    let ga = acc(grads, *a, m * k);
                    gemm_nn(g, val(*b), ga, m, n, k);
                }
                if wants(*b) {
                    let gb = acc(grads, *b, n * k);
                    gemm_tn(g, val(*a), gb, n, m, k);
                }
            }
            Op::BatchMatMul { a, b, trans_b } => {
                let sa = self.shape(*a);
                let (bsz, m, k) = (sa[0], sa[1], sa[2]);
                let n = g.len() / (bsz * m).max(1);
                let (ad, bd) = (val(*a), val(*b));
                if wants(*a) {
                    let ga = acc(grads, *a, bsz * m * k);
                    for i in 0..bsz {
                        let gi = &g[i * m * n..(i + 1) * m * n];
                        let bi = &bd[i * k * n..(i + 1) * k * n];
                        let gai = &mut ga[i * m * k..(i + 1) * m * k];
                        if *trans_b {
                            gemm_nn(gi, bi, gai, m, n, k);
                        } else {
                            gemm_nt(gi, bi, gai, m, n, k);
                        }
                    }
                }
                if wants(*b) {
                    let gb = acc(grads, *b, bsz * k * n);
                    for i in 0..bsz {
                        let gi = &g[i * m * n..(i + 1) * m * n];
                        let ai = &ad[i * m * k..(i + 1) * m * k];
                        let gbi = &mut gb[i * k * n..(i + 1) * k * n];
                        if *trans_b {
                            gemm_tn(gi, ai, gbi, n, m, k);
                        } else {
                            gemm_tn(ai, gi, gbi, k, m, n);
                        }
                    }
                }
            }
            Op::Add { a, b } => {
                for v in [*a, *b] {
                    if wants(v) {
                        add_into(acc(grads, v, g.len()), g);
                    }
                }
            }
            Op::Mul { a, b } => {
                let (ad, bd) = (val(*a), val(*b));
                if wants(*a) {
                    let ga = acc(grads, *a, g.len());
                    for ((o, &gv), &bv) in ga.iter_mut().zip(g).zip(bd) {
                        *o += gv * bv;
                    }
                }
                if wants(*b) {
                    let gb = acc(grads, *b, g.len());
                    for ((o, &gv), &av) in gb.iter_mut().zip(g).zip(ad) {
                        *o += gv * av;
                    }
                }
            }
            Op::AddBias { a, bias } => {
                if wants(*a) {
                    add_into(acc(grads, *a, g.len()), g);
                }
                if wants(*bias) {
                    let n = self.shape(*bias)[0];
                    let gb = acc(grads, *bias, n);
                    for row in g.chunks(n) {
                        add_into(gb, row);
                    }
                }
            }
            Op::Scale { a, factor } => {
                let ga = acc(grads, *a, g.len());
                for (o, &gv) in ga.iter_mut().zip(g) {
                    *o += gv * *factor;
                }
            }
            Op::Relu { a } => {
                let ad = val(*a);
                let ga = acc(grads, *a, g.len());
                for ((o, &gv), &x) in ga.iter_mut().zip(g).zip(ad) {
                    if x > T::zero() {
                        *o += gv;
                    }
                }
            }
            Op::Softmax { a } => {
                let y = node.value.data();
                let n = node.value.last_dim();
                let ga = acc(grads, *a, g.len());
                for ((gr, yr), or) in g.chunks(n).zip(y.chunks(n)).zip(ga.chunks_mut(n)) {
                    let dot: T = gr.iter().zip(yr).map(|(&gv, &yv)| gv * yv).sum();
                    for ((o, &gv), &yv) in or.iter_mut().zip(gr).zip(yr) {
                        *o += yv * (gv - dot);
                    }
                }
            }
            Op::LayerNorm {
                x,
                gain,
                bias,
                xhat,
                rstd,
            } => {
                let d = self.shape(*gain)[0];
                let gd = val(*gain);
                if wants(*gain) {
                    let gg = acc(grads, *gain, d);
                    for (gr, xr) in g.chunks(d).zip(xhat.chunks(d)) {
                        for ((o, &gv), &xh) in gg.iter_mut().zip(gr).zip(xr) {
                            *o += gv * xh;
                        }
                    }
                }
                if wants(*bias) {
                    let gb = acc(grads, *bias, d);
                    for gr in g.chunks(d) {
                        add_into(gb, gr);
                    }
                }
                if wants(*x) {
                    let dn = T::from_f64(d as f64);
                    let gx = acc(grads, *x, g.len());
                    let mut dxhat = vec![T::zero(); d];
                    for (r, ((gr, xr), or)) in g
                        .chunks(d)
                        .zip(xhat.chunks(d))
                        .zip(gx.chunks_mut(d))
                        .enumerate()
                    {
                        for ((dx, &gv), &gn) in dxhat.iter_mut().zip(gr).zip(gd) {
                            *dx = gv * gn;
                        }
                        let s1: T = dxhat.iter().copied().sum();
                        let s2: T = dxhat.iter().zip(xr).map(|(&a, &b)| a * b).sum();
                        let scale = rstd[r] / dn;
                        for ((o, &dx), &xh) in or.iter_mut().zip(&dxhat).zip(xr) {
                            *o += scale * (dn * dx - s1 - xh * s2);
                        }
                    }
                }
            }
            Op::Embedding { table, ids } => {
                let d = self.shape(*table)[1];
                let gt = acc(grads, *table, self.value(*table).len());
                for (&id, gr) in ids.iter().zip(g.chunks(d)) {
                    add_into(&mut gt[id * d..(id + 1) * d], gr);
                }
            }
            Op::Dropout { a, mask } => {
                let ga = acc(grads, *a, g.len());
                for ((o, &gv), &m) in ga.iter_mut().zip(g).zip(mask) {
                    *o += gv * m;
                }
            }
            Op::ConcatLast { parts } => {
                let total = node.value.last_dim();
                let rows = g.len() / total.max(1);
                let mut offset = 0;
                for &p in parts {
                    let w = self.value(p).last_dim();
                    if wants(p) {
                        let gp = acc(grads, p, rows * w);
                        for r in 0..rows {
                            add_into(
                                &mut gp[r * w..(r + 1) * w],
                                &g[r * total + offset..r * total + offset + w],
                            );
                        }
                    }
                    offset += w;
                }
            }
            Op::SliceLast { a, start } => {
                let w = self.value(*a).last_dim();
                let len = node.value.last_dim();
                let ga = acc(grads, *a, self.value(*a).len());
                for (or, gr) in ga.chunks_mut(w).zip(g.chunks(len)) {
                    add_into(&mut or[*start..*start + len], gr);
                }
            }
            Op::Reshape { a } => {
                add_into(acc(grads, *a, g.len()), g);
            }
            Op::Sum { a } => {
                let n = self.value(*a).len();
                let ga = acc(grads, *a, n);
                for o in ga.iter_mut() {
                    *o += g[0];
                }
            }
            Op::CrossEntropy {
                logits,
                probs,
                targets,
                count,
            } => {
                let v = self.value(*logits).last_dim();
                let scale = g[0] / T::from_f64(*count as f64);
                let gl = acc(grads, *logits, probs.len());
                for ((q, pr), or) in targets.iter().zip(probs.chunks(v)).zip(gl.chunks_mut(v)) {
                    let Some(q) = q else { continue };
                    for (o, &p) in or.iter_mut().zip(pr) {
                        *o += scale * p;
                    }
                    for &(c, w) in q {
                        or[c] -= scale * w;
                    }
                }
            }
        }
    }
}

fn acc<T: Float>(grads: &mut [Option<Vec<T>>], v: Var, len: usize) -> &mut [T] {
    grads[v.0].get_or_insert_with(|| vec![T::zero(); len])
}

fn add_into<T: Float>(dst: &mut [T], src: &[T]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}
