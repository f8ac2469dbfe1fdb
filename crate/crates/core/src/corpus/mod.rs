//! Vocabulary, parallel triplet files, synthetic benchmarks and run
//! configuration.

mod config;
pub mod synth;
mod triplets;
mod vocab;

pub use config::RunConfig;
pub use synth::{gen_synthetic, SynthSpec, SynthTriplet, Task};
pub use triplets::{load_triplets, read_lines, CorpusHandle, LoadedCorpus};
pub use vocab::{Vocabulary, SPECIALS};
