//! Writes the three synthetic tasks to disk and prints a sample of each.
//!
//! ```text
//! cargo run --example synthetic_corpus -- /tmp/synth
//! ```

use std::path::PathBuf;

use ape::corpus::synth::{gen_synthetic, SynthSpec, Task};
use ape::corpus::{CorpusHandle, Vocabulary};

fn main() -> ape::Result<()> {
    let root = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(std::env::temp_dir)
        .join("ape-synth");
    for task in [Task::Copy, Task::Corrupt, Task::Disambiguate] {
        let dir = root.join(task.to_string());
        let items = gen_synthetic(&SynthSpec::new(task, 500, 1), &dir)?;
        let corpus = CorpusHandle::in_dir(&dir)?;
        let vocab: Vocabulary = corpus.build_vocab(1000, 1)?;
        println!(
            "{task}: {} triplets in {}, vocabulary {}",
            items.len(),
            dir.display(),
            vocab.len()
        );
        for t in items.iter().take(2) {
            println!(
                "  src {}\n  mt  {}\n  pe  {}",
                t.src.join(" "),
                t.mt.join(" "),
                t.pe.join(" ")
            );
        }
    }
    Ok(())
}
