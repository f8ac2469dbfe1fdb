//! Trains the multi-source model briefly on the disambiguation task and
//! writes src–mt attention heatmaps for a few test sentences in every
//! supported format.
//!
//! ```text
//! cargo run --release --example alignment_heatmap -- /tmp/maps
//! ```

use std::path::PathBuf;

use ape::alignment::{emit_heatmap, extract_alignment, HeadAgg, HeatmapFormat, LayerSpec};
use ape::corpus::synth::{self, SynthSpec, Task};
use ape::model::{Model, ModelConfig};
use ape::training::{train, TrainConfig};

fn main() -> ape::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("ape-maps"));
    std::fs::create_dir_all(&out).map_err(|e| ape::Error::io(&out, e))?;
    let train_set = synth::generate(&SynthSpec::new(Task::Disambiguate, 2000, 1))?;
    let test_set = synth::generate(&SynthSpec::new(Task::Disambiguate, 6, 2))?;
    let vocab = synth::vocabulary(&train_set)?;
    let train_ids = synth::encode(&vocab, &train_set)?;
    let test_ids = synth::encode(&vocab, &test_set)?;

    let mut model = Model::<f32>::new(ModelConfig::desk(vocab.len()), 7)?;
    let cfg = TrainConfig {
        token_budget: 1200,
        warmup: 400,
        max_steps: 1500,
        eval_interval: 100,
        lr_scale: 2.0,
        ..TrainConfig::default()
    };
    train(&mut model, None, &train_ids, &train_ids[..100], &cfg)?;

    for (i, (t, ids)) in test_set.iter().zip(&test_ids).enumerate() {
        let map = extract_alignment(
            &model,
            Some(&vocab),
            &ids.src,
            &ids.mt,
            LayerSpec::Last,
            HeadAgg::Mean,
        )?;
        let row = t.ambiguous_position().expect("planted");
        println!(
            "{i}: X attends most to {:?} (marker at {})",
            map.src_tokens[map.row_argmax(row)],
            t.marker_position().expect("marker")
        );
        for format in [HeatmapFormat::Csv, HeatmapFormat::Pgm, HeatmapFormat::Svg] {
            emit_heatmap(
                &map,
                &out.join(format!("{i}.{}", format.extension())),
                format,
            )?;
        }
    }
    println!("heatmaps in {}", out.display());
    Ok(())
}
