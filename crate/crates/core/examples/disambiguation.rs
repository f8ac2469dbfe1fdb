//! Trains the multi-source model and the mt→pe baseline on the
//! disambiguation task and compares how often each resolves the ambiguous
//! token, plus corpus TER against the do-nothing baseline.
//!
//! ```text
//! cargo run --release --example disambiguation
//! ```

use std::time::Instant;

use ape::corpus::synth::{self, SynthSpec, Task};
use ape::decoding::greedy_decode;
use ape::metrics::{corpus_ter, EvalPair};
use ape::model::{Model, ModelConfig, SourceMode};
use ape::training::{train, TrainConfig};

fn main() -> ape::Result<()> {
    let train_set = synth::generate(&SynthSpec::new(Task::Disambiguate, 2000, 1))?;
    let test_set = synth::generate(&SynthSpec::new(Task::Disambiguate, 200, 2))?;
    let vocab = synth::vocabulary(&train_set)?;
    let train_ids = synth::encode(&vocab, &train_set)?;
    let test_ids = synth::encode(&vocab, &test_set)?;
    let dev_ids = synth::encode(
        &vocab,
        &synth::generate(&SynthSpec::new(Task::Disambiguate, 100, 3))?,
    )?;

    let cfg = TrainConfig {
        token_budget: 1200,
        warmup: 400,
        max_steps: 3000,
        eval_interval: 100,
        lr_scale: 2.0,
        patience: 6,
        ..TrainConfig::default()
    };

    let mt_ter = {
        let pairs: Vec<EvalPair> = test_set
            .iter()
            .map(|t| EvalPair::new(t.mt.clone(), t.pe.clone()))
            .collect();
        corpus_ter(&pairs)?.score
    };
    println!("do-nothing TER {:.2}", 100.0 * mt_ter);

    for mode in [SourceMode::Multi, SourceMode::MtOnly] {
        let started = Instant::now();
        let mut model = Model::<f32>::new(ModelConfig::desk(vocab.len()).with_mode(mode), 7)?;
        let state = train(&mut model, None, &train_ids, &dev_ids, &cfg)?;
        let mut correct = 0;
        let mut pairs = Vec::new();
        for (t, ids) in test_set.iter().zip(&test_ids) {
            let out = greedy_decode(&model, &ids.src, &ids.mt, ids.mt.len() + 5)?;
            let hyp = vocab.decode(out.tokens());
            let at = t.ambiguous_position().expect("planted token");
            if hyp.get(at) == t.pe.get(at) {
                correct += 1;
            }
            pairs.push(EvalPair::new(hyp, t.pe.clone()));
        }
        println!(
            "{mode:?}: {} steps, accuracy {:.1}%, TER {:.2}, {:.0}s",
            state.step,
            100.0 * correct as f64 / test_set.len() as f64,
            100.0 * corpus_ter(&pairs)?.score,
            started.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
