mod common;

use ape::decoding::{
    beam_decode, default_max_len, greedy_decode, postedit, score_sequence, DecodeOptions,
};
use ape::model::{Model, ModelConfig, SourceMode, EOS};
use common::*;

#[test]
fn beam_of_one_is_greedy() {
    for seed in 0..30 {
        let mut r = rng(seed);
        let model = tiny_model(
            9,
            [SourceMode::Multi, SourceMode::SrcOnly, SourceMode::MtOnly][seed as usize % 3],
            seed,
        );
        let (x, y) = (random_ids(&mut r, 9, 1..=5), random_ids(&mut r, 9, 1..=5));
        let g = greedy_decode(&model, &x, &y, 7).unwrap();
        let b = beam_decode(&model, &x, &y, 1, 7, 0.6).unwrap();
        assert_eq!(g.ids, b.ids);
        assert!((g.logprob - b.logprob).abs() < 1e-12);
    }
}

#[test]
fn reported_score_is_teacher_forced_score() {
    for seed in 0..10 {
        let mut r = rng(seed + 50);
        let model = tiny_model(11, SourceMode::Multi, seed);
        let (x, y) = (random_ids(&mut r, 11, 1..=5), random_ids(&mut r, 11, 1..=5));
        for beam in [1, 3, 6] {
            let h = beam_decode(&model, &x, &y, beam, 6, 0.6).unwrap();
            let s = score_sequence(&model, &x, &y, &h.ids).unwrap();
            assert!(
                (h.logprob - s).abs() < 1e-9,
                "beam {beam}: {} vs {s}",
                h.logprob
            );
        }
    }
}

#[test]
fn wider_beams_never_score_worse_without_length_penalty() {
    for seed in 0..10 {
        let mut r = rng(seed + 70);
        let model = tiny_model(6, SourceMode::Multi, seed);
        let (x, y) = (random_ids(&mut r, 6, 1..=4), random_ids(&mut r, 6, 1..=4));
        // Exhaustive width: every prefix survives, so the widest beam is exact.
        let exact = beam_decode(&model, &x, &y, 6usize.pow(3), 3, 0.0).unwrap();
        for beam in [1, 2, 4] {
            let h = beam_decode(&model, &x, &y, beam, 3, 0.0).unwrap();
            assert!(h.logprob <= exact.logprob + 1e-12);
        }
    }
}

#[test]
fn output_respects_length_limit() {
    let model = tiny_model(8, SourceMode::Multi, 3);
    let h = greedy_decode(&model, &[4, 5], &[6, 7], 2).unwrap();
    assert!(h.ids.len() <= 2);
    assert_eq!(h.truncated(), h.ids.last() != Some(&EOS));
    assert_eq!(default_max_len(4), 16);
    assert_eq!(default_max_len(0), 10);
}

#[test]
fn f32_and_f64_models_share_decoding() {
    let cfg = ModelConfig {
        float: ape::numerics::FloatWidth::F32,
        ..tiny_config(10, SourceMode::Multi)
    };
    let model = Model::<f32>::new(cfg, 8).unwrap();
    let h = postedit(&model, &[4, 5, 6], &[7, 8], DecodeOptions::default()).unwrap();
    assert!(h.logprob.is_finite() && h.logprob <= 0.0);
    assert!(h.tokens().iter().all(|&t| t != EOS));
}
