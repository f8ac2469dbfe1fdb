mod common;

use ape::numerics::{Smoothing, Tape, Tensor};
use common::*;

#[test]
fn composed_graph_matches_finite_differences() {
    for seed in 0..10 {
        let mut r = rng(seed);
        let inputs = vec![
            random_tensor(&mut r, &[2, 3, 4]),
            random_tensor(&mut r, &[4, 4]),
            random_tensor(&mut r, &[4]),
        ];
        let err = fd_relative_error(&inputs, seed, |t, v| {
            let h = t.matmul(v[0], v[1]).unwrap();
            let h = t.add_bias(h, v[2]).unwrap();
            let h = t.relu(h);
            let h = t.add(h, v[0]).unwrap();
            t.softmax(h).unwrap()
        });
        assert!(err < 1e-6, "seed {seed}: {err}");
    }
}

#[test]
fn reused_inputs_accumulate_gradients() {
    let inputs = vec![random_tensor(&mut rng(3), &[3, 3])];
    let err = fd_relative_error(&inputs, 1, |t, v| {
        let sq = t.mul(v[0], v[0]).unwrap();
        let mm = t.matmul(sq, v[0]).unwrap();
        t.matmul_nt(mm, v[0]).unwrap()
    });
    assert!(err < 1e-6, "{err}");
}

#[test]
fn uniform_logits_cost_log_vocab() {
    let mut tape = Tape::<f64>::new();
    let logits = tape.leaf(Tensor::zeros(&[3, 7]), true);
    let loss = tape
        .cross_entropy(
            logits,
            &[4, 5, 6],
            Smoothing {
                epsilon: 0.0,
                ignore: Some(0),
            },
        )
        .unwrap();
    assert!((tape.value(loss).data()[0] - 7f64.ln()).abs() < 1e-12);
}

#[test]
fn ignored_targets_get_no_gradient() {
    let mut tape = Tape::<f64>::new();
    let logits = tape.leaf(random_tensor(&mut rng(8), &[3, 5]), true);
    let loss = tape
        .cross_entropy(
            logits,
            &[2, 0, 4],
            Smoothing {
                epsilon: 0.1,
                ignore: Some(0),
            },
        )
        .unwrap();
    let g = tape.backward(loss).unwrap();
    let g = g.get(logits).unwrap();
    assert!(g.data()[5..10].iter().all(|&v| v == 0.0));
    assert!(g.data()[..5].iter().any(|&v| v != 0.0));
}

#[test]
fn all_ignored_targets_are_rejected() {
    let mut tape = Tape::<f64>::new();
    let logits = tape.leaf(Tensor::zeros(&[2, 5]), true);
    assert!(tape
        .cross_entropy(
            logits,
            &[0, 0],
            Smoothing {
                epsilon: 0.1,
                ignore: Some(0)
            }
        )
        .is_err());
}
