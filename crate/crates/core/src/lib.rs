//! Context-aware multi-source Transformer for automatic post-editing.
//!
//! Given a source sentence (`src`) and an upstream machine translation
//! (`mt`), the model produces a post-edited translation (`pe`). The src
//! encoder's output is fed into the mt encoder through cross-attention, so
//! every mt position carries its source context before decoding.
//!
//! Modules:
//!
//! - [`numerics`]: tensors, reverse-mode differentiation, Adam, warmup schedule
//! - [`model`]: the three-stack Transformer and checkpoint persistence
//! - [`training`]: token-budget batching, label-smoothed loss, training loop
//! - [`decoding`]: greedy and beam search
//! - [`metrics`]: case-sensitive TER with block shifts, corpus BLEU
//! - [`alignment`]: src–mt attention maps and heatmap export
//! - [`corpus`]: vocabulary, triplet files, synthetic tasks, run configuration
//! - [`cli`]: the `ape` command line front end
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub mod alignment;
pub mod cli;
pub mod corpus;
pub mod decoding;
pub mod error;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod training;

pub use error::{Error, Result};
