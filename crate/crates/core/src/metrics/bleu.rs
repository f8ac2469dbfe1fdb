use std::collections::HashMap;
use std::hash::Hash;

pub const MAX_ORDER: usize = 4;

/// Clipped n-gram matches and hypothesis n-gram totals per order, plus
/// lengths. Sums over sentences give the corpus statistics.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BleuStats {
    pub matches: Vec<usize>,
    pub totals: Vec<usize>,
    pub hyp_len: usize,
    pub ref_len: usize,
}

fn ngram_counts<S: Eq + Hash>(tokens: &[S], n: usize) -> HashMap<&[S], usize> {
    let mut counts = HashMap::new();
    if n > 0 {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

impl BleuStats {
    pub fn new<S: Eq + Hash>(hyp: &[S], reference: &[S], max_n: usize) -> Self {
        let mut matches = Vec::with_capacity(max_n);
        let mut totals = Vec::with_capacity(max_n);
        for n in 1..=max_n {
            let h = ngram_counts(hyp, n);
            let r = ngram_counts(reference, n);
            matches.push(
                h.iter()
                    .map(|(g, &c)| c.min(r.get(g).copied().unwrap_or(0)))
                    .sum(),
            );
            totals.push(hyp.len().saturating_sub(n - 1));
        }
        Self {
            matches,
            totals,
            hyp_len: hyp.len(),
            ref_len: reference.len(),
        }
    }

    pub fn add(&mut self, other: &BleuStats) {
        if self.matches.is_empty() {
            self.matches = vec![0; other.matches.len()];
            self.totals = vec![0; other.totals.len()];
        }
        for (a, b) in self.matches.iter_mut().zip(&other.matches) {
            *a += b;
        }
        for (a, b) in self.totals.iter_mut().zip(&other.totals) {
            *a += b;
        }
        self.hyp_len += other.hyp_len;
        self.ref_len += other.ref_len;
    }

    fn brevity_penalty(&self) -> f64 {
        if self.hyp_len >= self.ref_len {
            1.0
        } else {
            (1.0 - self.ref_len as f64 / self.hyp_len as f64).exp()
        }
    }

    /// Unsmoothed BLEU in [0, 100]. Orders for which the hypothesis side has
    /// no n-grams at all (every sentence shorter than n) are left out of the
    /// geometric mean; any other zero precision gives 0.
    pub fn score(&self) -> f64 {
        if self.hyp_len == 0 {
            return 0.0;
        }
        let mut log_sum = 0.0;
        let mut orders = 0;
        for (&m, &t) in self.matches.iter().zip(&self.totals) {
            if t == 0 {
                continue;
            }
            if m == 0 {
                return 0.0;
            }
            log_sum += (m as f64 / t as f64).ln();
            orders += 1;
        }
        if orders == 0 {
            return 0.0;
        }
        100.0 * self.brevity_penalty() * (log_sum / orders as f64).exp()
    }

    /// Sentence-level BLEU with add-one smoothing of orders ≥ 2.
    pub fn smoothed_score(&self) -> f64 {
        if self.hyp_len == 0 || self.matches.first().copied().unwrap_or(0) == 0 {
            return 0.0;
        }
        let k = self.matches.len() as f64;
        let log_sum: f64 = self
            .matches
            .iter()
            .zip(&self.totals)
            .enumerate()
            .map(|(i, (&m, &t))| {
                if i == 0 {
                    (m as f64 / t as f64).ln()
                } else {
                    ((m + 1) as f64 / (t + 1) as f64).ln()
                }
            })
            .sum();
        100.0 * self.brevity_penalty() * (log_sum / k).exp()
    }
}

/// Corpus BLEU over (hypothesis, reference) pairs, up to 4-grams.
pub fn corpus_bleu<S: Eq + Hash>(pairs: &[(&[S], &[S])]) -> f64 {
    let mut total = BleuStats::default();
    for (h, r) in pairs {
        total.add(&BleuStats::new(h, r, MAX_ORDER));
    }
    total.score()
}

/// Smoothed sentence BLEU, for diagnostics.
pub fn sentence_bleu<S: Eq + Hash>(hyp: &[S], reference: &[S]) -> f64 {
    BleuStats::new(hyp, reference, MAX_ORDER).smoothed_score()
}
