use serde::{Deserialize, Serialize};

use super::{Float, Tensor};
use crate::error::{Error, Result};

/// Moment estimates and hyper-parameters of the Adam optimizer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamState<T> {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    first: Vec<Vec<T>>,
    second: Vec<Vec<T>>,
}

impl<T: Float> AdamState<T> {
    /// Fresh state with β1 = 0.9, β2 = 0.98 and ε = 1e-9.
    pub fn new(params: &[Tensor<T>]) -> Self {
        Self::with_hyper(params, 0.9, 0.98, 1e-9)
    }

    pub fn with_hyper(params: &[Tensor<T>], beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            beta1,
            beta2,
            eps,
            step: 0,
            first: params.iter().map(|p| vec![T::zero(); p.len()]).collect(),
            second: params.iter().map(|p| vec![T::zero(); p.len()]).collect(),
        }
    }

    pub fn first_moment(&self, i: usize) -> &[T] {
        &self.first[i]
    }

    pub fn second_moment(&self, i: usize) -> &[T] {
        &self.second[i]
    }

    /// One bias-corrected Adam update. Rejects non-finite gradients before
    /// touching any state.
    pub fn apply(&mut self, params: &mut [Tensor<T>], grads: &[Tensor<T>], lr: f64) -> Result<()> {
        if lr.is_nan() || lr <= 0.0 {
            return Err(Error::Contract(format!(
                "learning rate must be positive, got {lr}"
            )));
        }
        if params.len() != grads.len() || params.len() != self.first.len() {
            return Err(Error::Contract(format!(
                "adam: {} params, {} grads, {} moment buffers",
                params.len(),
                grads.len(),
                self.first.len()
            )));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.shape() != g.shape() || p.len() != self.first[i].len() {
                return Err(Error::dim("adam_step", p.shape(), g.shape()));
            }
            if !g.all_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite gradient in parameter {i}"
                )));
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let b1 = T::from_f64(self.beta1);
        let b2 = T::from_f64(self.beta2);
        let c1 = T::from_f64(1.0 - self.beta1.powi(t));
        let c2 = T::from_f64(1.0 - self.beta2.powi(t));
        let eps = T::from_f64(self.eps);
        let lr = T::from_f64(lr);
        let (one_b1, one_b2) = (T::one() - b1, T::one() - b2);
        for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let (m, v) = (&mut self.first[i], &mut self.second[i]);
            for (((w, &gv), mv), vv) in p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.iter_mut())
                .zip(v.iter_mut())
            {
                *mv = b1 * *mv + one_b1 * gv;
                *vv = b2 * *vv + one_b2 * gv * gv;
                let m_hat = *mv / c1;
                let v_hat = *vv / c2;
                *w -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

/// Inverse-square-root schedule with linear warmup:
/// `d_model^-0.5 · min(step^-0.5, step · warmup^-1.5)`.
pub fn lr_schedule(step: u64, d_model: usize, warmup: u64) -> Result<f64> {
    if step == 0 || warmup == 0 || d_model == 0 {
        return Err(Error::Contract(format!(
            "lr_schedule needs step, warmup, d_model >= 1 (got {step}, {warmup}, {d_model})"
        )));
    }
    let s = step as f64;
    let decay = s.powf(-0.5);
    let ramp = s * (warmup as f64).powf(-1.5);
    Ok((d_model as f64).powf(-0.5) * decay.min(ramp))
}

/// Rescales `grads` in place so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_global_norm<T: Float>(grads: &mut [Tensor<T>], max_norm: f64) -> f64 {
    let norm = grads
        .iter()
        .map(|g| {
            g.data()
                .iter()
                .map(|v| v.as_f64() * v.as_f64())
                .sum::<f64>()
        })
        .sum::<f64>()
        .sqrt();
    if norm.is_finite() && norm > max_norm && max_norm > 0.0 {
        let factor = T::from_f64(max_norm / norm);
        for g in grads.iter_mut() {
            g.data_mut().iter_mut().for_each(|v| *v *= factor);
        }
    }
    norm
}
