//! Trains a small model on the corrupt task (mt is pe with random
//! substitutions, src is a relabelled pe), saves a checkpoint, reloads it
//! and post-edits held-out sentences with greedy and beam search.
//!
//! ```text
//! cargo run --release --example copy_task
//! ```

use ape::corpus::synth::{self, SynthSpec, Task};
use ape::decoding::{postedit, DecodeOptions};
use ape::metrics::{corpus_ter, EvalPair};
use ape::model::{load_checkpoint, save_checkpoint, Model, ModelConfig};
use ape::training::{train, TrainConfig};

fn main() -> ape::Result<()> {
    let gen = |n, seed| synth::generate(&SynthSpec::new(Task::Corrupt, n, seed).with_lengths(3, 6));
    let (train_set, dev_set, test_set) = (gen(1500, 1)?, gen(100, 2)?, gen(50, 3)?);
    let vocab = synth::vocabulary(&train_set)?;
    let (train_ids, dev_ids) = (
        synth::encode(&vocab, &train_set)?,
        synth::encode(&vocab, &dev_set)?,
    );

    let mut model = Model::<f32>::new(ModelConfig::desk(vocab.len()), 2)?;
    let cfg = TrainConfig {
        token_budget: 1000,
        warmup: 300,
        max_steps: 1500,
        eval_interval: 100,
        lr_scale: 2.0,
        ..TrainConfig::default()
    };
    let state = train(&mut model, Some(&vocab), &train_ids, &dev_ids, &cfg)?;
    println!(
        "{} steps, best dev loss {:.4} at step {}",
        state.step, state.best_dev_loss, state.best_step
    );

    let path = std::env::temp_dir().join("ape-corrupt.ckpt");
    save_checkpoint(&model, &vocab, &path)?;
    let (model, vocab) = load_checkpoint::<f32>(&path)?;
    println!(
        "reloaded {} parameters from {}",
        model.param_count(),
        path.display()
    );

    let before: Vec<EvalPair> = test_set
        .iter()
        .map(|t| EvalPair::new(t.mt.clone(), t.pe.clone()))
        .collect();
    println!("mt TER {:.2}", 100.0 * corpus_ter(&before)?.score);
    for beam in [1, 4] {
        let opts = DecodeOptions {
            beam,
            ..DecodeOptions::default()
        };
        let mut pairs = Vec::new();
        for t in &test_set {
            let h = postedit(&model, &vocab.encode(&t.src), &vocab.encode(&t.mt), opts)?;
            pairs.push(EvalPair::new(vocab.decode(h.tokens()), t.pe.clone()));
        }
        println!(
            "beam {beam}: post-edit TER {:.2}",
            100.0 * corpus_ter(&pairs)?.score
        );
    }
    let t = &test_set[0];
    let h = postedit(
        &model,
        &vocab.encode(&t.src),
        &vocab.encode(&t.mt),
        DecodeOptions::default(),
    )?;
    println!(
        "mt  {}\nape {}\npe  {}",
        t.mt.join(" "),
        vocab.detokenize(h.tokens()),
        t.pe.join(" ")
    );
    Ok(())
}
