mod common;

use ape::corpus::Vocabulary;
use ape::model::{
    load_checkpoint, peek_config, save_checkpoint, Model, ModelConfig, SeqBatch, SourceMode,
};
use ape::numerics::FloatWidth;
use ape::Error;
use common::*;

fn vocab(n: usize) -> Vocabulary {
    // Four specials plus n - 4 words.
    let words: Vec<String> = (0..n - 4).map(|i| format!("w{i}")).collect();
    Vocabulary::build([words.join(" ").as_str()], 1000, 1).unwrap()
}

#[test]
fn every_mode_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let v = vocab(12);
    for mode in [SourceMode::Multi, SourceMode::SrcOnly, SourceMode::MtOnly] {
        let model = Model::<f64>::new(tiny_config(v.len(), mode), 1).unwrap();
        let path = dir.path().join("m.ckpt");
        save_checkpoint(&model, &v, &path).unwrap();
        assert_eq!(peek_config(&path).unwrap(), *model.config());
        let (back, v2) = load_checkpoint::<f64>(&path).unwrap();
        assert_eq!(v2, v);
        assert_eq!(back.params(), model.params());
        let run = |m: &Model<f64>| {
            let mut s = m.eval_session();
            let (l, _) = s
                .forward(
                    &SeqBatch::single(&[5, 6]).unwrap(),
                    &SeqBatch::single(&[7]).unwrap(),
                    &SeqBatch::single(&[2, 8]).unwrap(),
                )
                .unwrap();
            s.value(l).clone()
        };
        assert_eq!(run(&model), run(&back));
    }
}

#[test]
fn width_mismatch_is_a_header_error() {
    let dir = tempfile::tempdir().unwrap();
    let v = vocab(9);
    let cfg = ModelConfig {
        float: FloatWidth::F32,
        ..tiny_config(v.len(), SourceMode::Multi)
    };
    let model = Model::<f32>::new(cfg, 1).unwrap();
    let path = dir.path().join("m.ckpt");
    save_checkpoint(&model, &v, &path).unwrap();
    assert!(matches!(
        load_checkpoint::<f64>(&path),
        Err(Error::Header(_))
    ));
}

#[test]
fn saving_with_wrong_vocabulary_fails() {
    let dir = tempfile::tempdir().unwrap();
    let model = tiny_model(9, SourceMode::Multi, 1);
    let err = save_checkpoint(&model, &vocab(10), &dir.path().join("m.ckpt")).unwrap_err();
    assert!(matches!(err, Error::VocabSizeMismatch { .. }));
}

#[test]
fn every_truncation_point_is_detected() {
    let dir = tempfile::tempdir().unwrap();
    let v = vocab(7);
    let cfg = ModelConfig {
        d_model: 4,
        n_layers: 1,
        d_ff: 4,
        ..tiny_config(v.len(), SourceMode::Multi)
    };
    let model = Model::<f64>::new(cfg, 1).unwrap();
    let path = dir.path().join("m.ckpt");
    save_checkpoint(&model, &v, &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    let cut = dir.path().join("cut.ckpt");
    for n in (0..bytes.len()).step_by(7) {
        std::fs::write(&cut, &bytes[..n]).unwrap();
        let err = load_checkpoint::<f64>(&cut).unwrap_err();
        assert!(
            matches!(err, Error::Truncated(_) | Error::Header(_)),
            "cut at {n}: {err}"
        );
    }
    let mut long = bytes.clone();
    long.push(0);
    std::fs::write(&cut, &long).unwrap();
    assert!(load_checkpoint::<f64>(&cut).is_err());
}
