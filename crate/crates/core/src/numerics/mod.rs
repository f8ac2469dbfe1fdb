//! Tensor arithmetic, reverse-mode differentiation and optimisation.

mod kernels;
mod optim;
mod scalar;
mod tape;
mod tensor;

pub use kernels::transpose;
pub use optim::{clip_global_norm, lr_schedule, AdamState};
pub use scalar::{Float, FloatWidth};
pub use tape::{Gradients, Smoothing, Tape, Var};
pub use tensor::Tensor;
