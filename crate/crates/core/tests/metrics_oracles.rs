mod common;

use ape::metrics::{corpus_bleu, levenshtein, sentence_bleu, ter, BleuStats};
use common::{
    all_sequences, oracle_bleu, oracle_levenshtein, oracle_shift_edit_cost, shift_closure,
};

const ALPHABET: [&str; 3] = ["a", "b", "c"];

#[test]
fn levenshtein_matches_recursive_table() {
    let seqs = all_sequences(&ALPHABET, 4);
    for h in &seqs {
        for r in &seqs {
            assert_eq!(
                levenshtein(h, r),
                oracle_levenshtein(h, r),
                "{h:?} vs {r:?}"
            );
        }
    }
}

#[test]
fn greedy_ter_bounded_by_exact_shift_cost() {
    let seqs = all_sequences(&ALPHABET, 5);
    let (mut total, mut equal) = (0usize, 0usize);
    for h in &seqs {
        let closure = shift_closure(h);
        for r in seqs.iter().filter(|r| !r.is_empty()) {
            let t = ter(h, r);
            let exact = oracle_shift_edit_cost(&closure, r);
            assert!(
                t.edits() >= exact,
                "{h:?} vs {r:?}: greedy {} < exact {exact}",
                t.edits()
            );
            assert!(t.edits() <= levenshtein(h, r));
            total += 1;
            equal += usize::from(t.edits() == exact);
        }
    }
    let rate = equal as f64 / total as f64;
    assert!(
        rate >= 0.95,
        "greedy equals the exact cost in {:.4} of {total} cases",
        rate
    );
}

#[test]
fn ter_zero_iff_identical() {
    let seqs = all_sequences(&ALPHABET, 3);
    for h in &seqs {
        for r in seqs.iter().filter(|r| !r.is_empty()) {
            assert_eq!(ter(h, r).score == 0.0, h == r);
        }
    }
}

#[test]
fn bleu_matches_direct_counting() {
    let seqs = all_sequences(&ALPHABET, 5);
    let nonempty: Vec<_> = seqs.iter().filter(|s| !s.is_empty()).collect();
    for (i, h) in seqs.iter().enumerate() {
        for r in nonempty.iter().skip(i % 7).step_by(7) {
            let ours = corpus_bleu(&[(&h[..], &r[..])]);
            let oracle = oracle_bleu(&[(h.clone(), (*r).clone())]);
            assert!(
                (ours - oracle).abs() < 1e-9,
                "{h:?} vs {r:?}: {ours} vs {oracle}"
            );
        }
    }
}

#[test]
fn identity_gives_perfect_scores() {
    for s in all_sequences(&ALPHABET, 5).iter().filter(|s| !s.is_empty()) {
        assert_eq!(ter(s, s).score, 0.0);
        assert!((corpus_bleu(&[(&s[..], &s[..])]) - 100.0).abs() < 1e-9);
    }
}

#[test]
fn corpus_bleu_ignores_pair_order() {
    let seqs = all_sequences(&ALPHABET, 4);
    let pairs: Vec<(&[&str], &[&str])> = seqs
        .iter()
        .skip(5)
        .step_by(11)
        .zip(seqs.iter().skip(9).step_by(13))
        .map(|(h, r)| (&h[..], &r[..]))
        .collect();
    let mut reversed = pairs.clone();
    reversed.reverse();
    assert!((corpus_bleu(&pairs) - corpus_bleu(&reversed)).abs() < 1e-9);
}

#[test]
fn smoothed_sentence_bleu_worked_example() {
    let h = ["a", "b", "c", "d"];
    let r = ["a", "b", "c", "e"];
    assert_eq!(BleuStats::new(&h, &r, 4).score(), 0.0);
    assert!((sentence_bleu(&h, &r) - 65.80370064762462).abs() < 1e-9);
}
