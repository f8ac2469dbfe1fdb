use crate::error::{Error, Result};
use crate::numerics::{Float, Tape, Tensor, Var};

/// Projection matrices of one attention block, all `[d_model, d_model]`.
/// Column block `i·d_k .. (i+1)·d_k` of the query, key and value matrices is
/// head `i`'s projection; `output` maps the concatenated heads back.
#[derive(Debug, Clone, Copy)]
pub struct AttnWeights {
    pub query: Var,
    pub key: Var,
    pub value: Var,
    pub output: Var,
}

/// Multi-head scaled dot-product attention over `[B, T, d]` operands.
///
/// `mask`, when given, is an additive `[B, Tq, Tk]` tensor on the tape.
/// Returns the `[B, Tq, d]` context and every head's `[B, Tq, Tk]` softmax.
pub fn multi_head_attention<T: Float>(
    tape: &mut Tape<T>,
    q_in: Var,
    k_in: Var,
    v_in: Var,
    w: AttnWeights,
    n_heads: usize,
    mask: Option<Var>,
) -> Result<(Var, Vec<Var>)> {
    let (sq, sk, sv) = (tape.shape(q_in), tape.shape(k_in), tape.shape(v_in));
    if sq.len() != 3 || sk.len() != 3 || sk != sv || sq[0] != sk[0] || sq[2] != sk[2] {
        return Err(Error::dim("multi_head_attention", sq, sk));
    }
    let (bsz, tq, d) = (sq[0], sq[1], sq[2]);
    let tk = sk[1];
    if n_heads == 0 || d % n_heads != 0 {
        return Err(Error::Config(format!(
            "{n_heads} heads do not divide width {d}"
        )));
    }
    if let Some(m) = mask {
        if tape.shape(m) != [bsz, tq, tk] {
            return Err(Error::dim("attention mask", tape.shape(m), &[bsz, tq, tk]));
        }
    }
    let dk = d / n_heads;
    let scale = T::from_f64(1.0 / (dk as f64).sqrt());
    let q = tape.matmul(q_in, w.query)?;
    let k = tape.matmul(k_in, w.key)?;
    let v = tape.matmul(v_in, w.value)?;
    let mut contexts = Vec::with_capacity(n_heads);
    let mut weights = Vec::with_capacity(n_heads);
    for h in 0..n_heads {
        let qh = tape.slice_last(q, h * dk, dk)?;
        let kh = tape.slice_last(k, h * dk, dk)?;
        let vh = tape.slice_last(v, h * dk, dk)?;
        let scores = tape.batch_matmul(qh, kh, true)?;
        let mut scores = tape.scale(scores, scale);
        if let Some(m) = mask {
            scores = tape.add(scores, m)?;
        }
        let probs = tape.softmax(scores)?;
        contexts.push(tape.batch_matmul(probs, vh, false)?);
        weights.push(probs);
    }
    let concat = if n_heads == 1 {
        contexts[0]
    } else {
        tape.concat_last(&contexts)?
    };
    Ok((tape.matmul(concat, w.output)?, weights))
}

/// Additive mask forbidding PAD keys and, when `causal`, keys after the
/// query position. A query row that would have every key masked is left
/// unmasked so its softmax stays well defined. Returns `None` when nothing
/// is masked.
pub fn attention_mask<T: Float>(
    batch: usize,
    tq: usize,
    tk: usize,
    key_pad: &[bool],
    causal: bool,
) -> Option<Tensor<T>> {
    debug_assert_eq!(key_pad.len(), batch * tk);
    if !causal && !key_pad.iter().any(|&p| p) {
        return None;
    }
    let neg = T::mask_value();
    let mut data = vec![T::zero(); batch * tq * tk];
    for b in 0..batch {
        let pads = &key_pad[b * tk..(b + 1) * tk];
        for i in 0..tq {
            let row = &mut data[(b * tq + i) * tk..(b * tq + i + 1) * tk];
            let blocked = |j: usize| pads[j] || (causal && j > i);
            if (0..tk).all(blocked) {
                continue;
            }
            for (j, cell) in row.iter_mut().enumerate() {
                if blocked(j) {
                    *cell = neg;
                }
            }
        }
    }
    Some(Tensor::new(vec![batch, tq, tk], data).expect("mask shape"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn causal_mask_blocks_future_keys() {
        let m = attention_mask::<f64>(1, 3, 3, &[false; 3], true).unwrap();
        let inf = f64::NEG_INFINITY;
        assert_eq!(m.data(), &[0.0, inf, inf, 0.0, 0.0, inf, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn fully_padded_row_stays_open() {
        let m = attention_mask::<f32>(1, 2, 2, &[true, true], false).unwrap();
        assert!(m.data().iter().all(|&v| v == 0.0));
        let m = attention_mask::<f32>(1, 1, 3, &[false, true, false], false).unwrap();
        assert_eq!(m.data(), &[0.0, -1e9, 0.0]);
        assert!(attention_mask::<f32>(1, 2, 2, &[false, false], false).is_none());
    }
}
