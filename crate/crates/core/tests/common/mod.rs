//! Shared helpers: finite-difference gradients, brute-force metric oracles
//! and small random models.
#![allow(dead_code)]

use std::collections::{HashMap, HashSet, VecDeque};

use ape::model::{Model, ModelConfig, SourceMode};
use ape::numerics::{FloatWidth, Tape, Tensor, Var};
use ape::training::Triplet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor<f64> {
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    Tensor::new(shape.to_vec(), data).unwrap()
}

/// Norm-wise relative error between analytic and central-difference
/// gradients of `Σ build(inputs) ⊙ R` for a fixed random `R`.
pub fn fd_relative_error<F>(inputs: &[Tensor<f64>], proj_seed: u64, build: F) -> f64
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Var,
{
    let eval = |inputs: &[Tensor<f64>], grad: bool| -> (f64, Vec<Tensor<f64>>) {
        let mut tape = Tape::<f64>::new();
        let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t.clone(), grad)).collect();
        let out = build(&mut tape, &vars);
        let shape = tape.shape(out).to_vec();
        let loss = if shape.is_empty() || tape.value(out).len() == 1 && shape.len() <= 1 {
            out
        } else {
            let r = random_tensor(&mut rng(proj_seed), &shape);
            let r = tape.constant(r);
            let prod = tape.mul(out, r).unwrap();
            tape.sum(prod)
        };
        let value = tape.value(loss).data()[0];
        if !grad {
            return (value, Vec::new());
        }
        let mut g = tape.backward(loss).unwrap();
        let grads = vars
            .iter()
            .zip(inputs)
            .map(|(&v, t)| g.take(v).unwrap_or_else(|| Tensor::zeros(t.shape())))
            .collect();
        (value, grads)
    };
    let (_, analytic) = eval(inputs, true);
    let h = 1e-6;
    let (mut diff, mut na, mut nn) = (0.0f64, 0.0f64, 0.0f64);
    for (i, t) in inputs.iter().enumerate() {
        for j in 0..t.len() {
            let mut plus = inputs.to_vec();
            plus[i].data_mut()[j] += h;
            let mut minus = inputs.to_vec();
            minus[i].data_mut()[j] -= h;
            let numeric = (eval(&plus, false).0 - eval(&minus, false).0) / (2.0 * h);
            let a = analytic[i].data()[j];
            diff += (a - numeric).powi(2);
            na += a * a;
            nn += numeric * numeric;
        }
    }
    diff.sqrt() / na.sqrt().max(nn.sqrt()).max(1e-12)
}

/// A small f64 model for property checks.
pub fn tiny_config(vocab: usize, mode: SourceMode) -> ModelConfig {
    ModelConfig {
        d_model: 8,
        n_heads: 2,
        n_layers: 2,
        d_ff: 16,
        vocab_size: vocab,
        dropout: 0.0,
        max_len: 32,
        float: FloatWidth::F64,
        mode,
    }
}

pub fn tiny_model(vocab: usize, mode: SourceMode, seed: u64) -> Model<f64> {
    Model::new(tiny_config(vocab, mode), seed).unwrap()
}

/// Random non-special ids (≥ 4) of a length in `lens`.
pub fn random_ids(
    rng: &mut ChaCha8Rng,
    vocab: usize,
    lens: std::ops::RangeInclusive<usize>,
) -> Vec<usize> {
    let n = rng.random_range(lens);
    (0..n).map(|_| rng.random_range(4..vocab)).collect()
}

pub fn random_triplet(
    rng: &mut ChaCha8Rng,
    vocab: usize,
    lens: std::ops::RangeInclusive<usize>,
) -> Triplet {
    Triplet::new(
        random_ids(rng, vocab, lens.clone()),
        random_ids(rng, vocab, lens.clone()),
        random_ids(rng, vocab, lens),
    )
    .unwrap()
}

/// Every sequence over `alphabet` with length in `0..=max_len`.
pub fn all_sequences(alphabet: &[&'static str], max_len: usize) -> Vec<Vec<&'static str>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for &a in alphabet {
                let mut t: Vec<&'static str> = s.clone();
                t.push(a);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Edit distance by full recursion table, written independently of the
/// library's two-row version.
pub fn oracle_levenshtein<S: PartialEq>(a: &[S], b: &[S]) -> usize {
    let mut memo = vec![vec![usize::MAX; b.len() + 1]; a.len() + 1];
    fn go<S: PartialEq>(a: &[S], b: &[S], i: usize, j: usize, memo: &mut Vec<Vec<usize>>) -> usize {
        if memo[i][j] != usize::MAX {
            return memo[i][j];
        }
        let v = if i == a.len() {
            b.len() - j
        } else if j == b.len() {
            a.len() - i
        } else {
            let keep = go(a, b, i + 1, j + 1, memo) + usize::from(a[i] != b[j]);
            keep.min(go(a, b, i + 1, j, memo) + 1)
                .min(go(a, b, i, j + 1, memo) + 1)
        };
        memo[i][j] = v;
        v
    }
    go(a, b, 0, 0, &mut memo)
}

/// Every arrangement reachable from `seq` by block moves, with the fewest
/// moves needed to reach it (breadth-first search, no span restrictions).
pub fn shift_closure(seq: &[&'static str]) -> HashMap<Vec<&'static str>, usize> {
    let mut seen = HashMap::new();
    seen.insert(seq.to_vec(), 0);
    let mut queue = VecDeque::from([seq.to_vec()]);
    while let Some(cur) = queue.pop_front() {
        let d = seen[&cur];
        let n = cur.len();
        for start in 0..n {
            for len in 1..=n - start {
                let mut rest = cur.clone();
                let block: Vec<_> = rest.drain(start..start + len).collect();
                for dest in 0..=rest.len() {
                    let mut moved = rest.clone();
                    moved.splice(dest..dest, block.iter().copied());
                    if !seen.contains_key(&moved) {
                        seen.insert(moved.clone(), d + 1);
                        queue.push_back(moved);
                    }
                }
            }
        }
    }
    seen
}

/// Exact minimal (block moves + edit distance) over all rearrangements.
pub fn oracle_shift_edit_cost(
    closure: &HashMap<Vec<&'static str>, usize>,
    reference: &[&'static str],
) -> usize {
    closure
        .iter()
        .map(|(arr, &moves)| moves + oracle_levenshtein(arr, reference))
        .min()
        .unwrap()
}

/// Corpus BLEU by direct counting: each n-gram's clipped count is the
/// minimum of its occurrences in hypothesis and reference.
pub fn oracle_bleu(pairs: &[(Vec<&'static str>, Vec<&'static str>)]) -> f64 {
    let mut matches = [0usize; 4];
    let mut totals = [0usize; 4];
    let (mut c, mut r) = (0usize, 0usize);
    for (h, rf) in pairs {
        c += h.len();
        r += rf.len();
        for n in 1..=4 {
            if h.len() < n {
                continue;
            }
            let grams_h: Vec<&[&str]> = h.windows(n).collect();
            let grams_r: Vec<&[&str]> = if rf.len() >= n {
                rf.windows(n).collect()
            } else {
                vec![]
            };
            totals[n - 1] += grams_h.len();
            let distinct: HashSet<&[&str]> = grams_h.iter().copied().collect();
            for g in distinct {
                let in_h = grams_h.iter().filter(|x| **x == g).count();
                let in_r = grams_r.iter().filter(|x| **x == g).count();
                matches[n - 1] += in_h.min(in_r);
            }
        }
    }
    if c == 0 {
        return 0.0;
    }
    let mut logs = Vec::new();
    for n in 0..4 {
        if totals[n] == 0 {
            continue;
        }
        if matches[n] == 0 {
            return 0.0;
        }
        logs.push((matches[n] as f64 / totals[n] as f64).ln());
    }
    if logs.is_empty() {
        return 0.0;
    }
    let bp = if c >= r {
        1.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    };
    100.0 * bp * (logs.iter().sum::<f64>() / logs.len() as f64).exp()
}
