use serde::Serialize;

/// Longest block the shift search moves.
pub const MAX_SHIFT_SPAN: usize = 10;
/// Farthest a block may travel, in tokens.
pub const MAX_SHIFT_DISTANCE: usize = 50;

/// Edit counts behind one TER score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct TerBreakdown {
    pub insertions: usize,
    pub deletions: usize,
    pub substitutions: usize,
    pub shifts: usize,
    pub ref_len: usize,
    pub score: f64,
}

impl TerBreakdown {
    pub fn edits(&self) -> usize {
        self.insertions + self.deletions + self.substitutions + self.shifts
    }

    /// Adds another breakdown's counts and recomputes the micro-averaged score.
    pub fn accumulate(&mut self, other: &TerBreakdown) {
        self.insertions += other.insertions;
        self.deletions += other.deletions;
        self.substitutions += other.substitutions;
        self.shifts += other.shifts;
        self.ref_len += other.ref_len;
        self.score = if self.ref_len == 0 {
            0.0
        } else {
            self.edits() as f64 / self.ref_len as f64
        };
    }
}

fn dp_table<S: PartialEq>(hyp: &[S], reference: &[S]) -> Vec<Vec<usize>> {
    let (n, m) = (hyp.len(), reference.len());
    let mut d = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = d[i - 1][j - 1] + usize::from(hyp[i - 1] != reference[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d
}

/// Minimal number of unit-cost insertions, deletions and substitutions
/// turning `hyp` into `reference`. Tokens compare exactly (case-sensitive).
pub fn levenshtein<S: PartialEq>(hyp: &[S], reference: &[S]) -> usize {
    if hyp.len() < reference.len() {
        return levenshtein(reference, hyp);
    }
    // Two-row version; `reference` is the shorter side.
    let m = reference.len();
    let mut prev: Vec<usize> = (0..=m).collect();
    let mut cur = vec![0; m + 1];
    for (i, h) in hyp.iter().enumerate() {
        cur[0] = i + 1;
        for j in 1..=m {
            let sub = prev[j - 1] + usize::from(*h != reference[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}

/// (insertions, deletions, substitutions) of one optimal alignment.
fn edit_counts<S: PartialEq>(hyp: &[S], reference: &[S]) -> (usize, usize, usize) {
    let d = dp_table(hyp, reference);
    let (mut i, mut j) = (hyp.len(), reference.len());
    let (mut ins, mut del, mut sub) = (0, 0, 0);
    while i > 0 || j > 0 {
        if i > 0
            && j > 0
            && d[i][j] == d[i - 1][j - 1] + usize::from(hyp[i - 1] != reference[j - 1])
        {
            sub += usize::from(hyp[i - 1] != reference[j - 1]);
            i -= 1;
            j -= 1;
        } else if i > 0 && d[i][j] == d[i - 1][j] + 1 {
            del += 1;
            i -= 1;
        } else {
            ins += 1;
            j -= 1;
        }
    }
    (ins, del, sub)
}

fn occurs_in<S: PartialEq>(span: &[S], reference: &[S]) -> bool {
    reference.windows(span.len()).any(|w| w == span)
}

/// `seq` with `seq[start..start + len]` removed and reinserted so that it
/// begins at index `dest` of the result.
pub fn apply_shift<S: Clone>(seq: &[S], start: usize, len: usize, dest: usize) -> Vec<S> {
    let mut rest: Vec<S> = Vec::with_capacity(seq.len());
    rest.extend_from_slice(&seq[..start]);
    rest.extend_from_slice(&seq[start + len..]);
    let mut out = Vec::with_capacity(seq.len());
    out.extend_from_slice(&rest[..dest]);
    out.extend_from_slice(&seq[start..start + len]);
    out.extend_from_slice(&rest[dest..]);
    out
}

/// The shift that lowers the edit distance the most, if any lowers it by
/// more than the shift's own cost of one. Candidates are scanned by span
/// start, then length, then destination; the first of equally good shifts
/// wins.
fn best_shift<S: PartialEq + Clone>(
    hyp: &[S],
    reference: &[S],
    current: usize,
) -> Option<(Vec<S>, usize)> {
    let mut best: Option<(Vec<S>, usize)> = None;
    for start in 0..hyp.len() {
        for len in 1..=MAX_SHIFT_SPAN.min(hyp.len() - start) {
            let span = &hyp[start..start + len];
            if !occurs_in(span, reference) {
                continue;
            }
            let rest_len = hyp.len() - len;
            for dest in 0..=rest_len {
                if dest == start || dest.abs_diff(start) > MAX_SHIFT_DISTANCE {
                    continue;
                }
                let moved = apply_shift(hyp, start, len, dest);
                let d = levenshtein(&moved, reference);
                let bar = best.as_ref().map_or(current, |b| b.1 + 1);
                if d + 1 < bar {
                    best = Some((moved, d));
                }
            }
        }
    }
    best
}

/// Translation edit rate with greedy block shifts.
///
/// While some block move of a hyp span that also occurs in the reference
/// (at most [`MAX_SHIFT_SPAN`] tokens, moved at most
/// [`MAX_SHIFT_DISTANCE`] positions) lowers edits + shifts, the best such
/// move is applied. The score is `(edits + shifts) / ref_len`.
pub fn ter<S: PartialEq + Clone>(hyp: &[S], reference: &[S]) -> TerBreakdown {
    let mut current_hyp = hyp.to_vec();
    let mut dist = levenshtein(&current_hyp, reference);
    let mut shifts = 0;
    while dist > 0 {
        match best_shift(&current_hyp, reference, dist) {
            Some((moved, d)) => {
                current_hyp = moved;
                dist = d;
                shifts += 1;
            }
            None => break,
        }
    }
    let (insertions, deletions, substitutions) = edit_counts(&current_hyp, reference);
    let ref_len = reference.len();
    let total = insertions + deletions + substitutions + shifts;
    TerBreakdown {
        insertions,
        deletions,
        substitutions,
        shifts,
        ref_len,
        score: if ref_len == 0 {
            if total == 0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            total as f64 / ref_len as f64
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn levenshtein_examples() {
        assert_eq!(levenshtein(&toks("a b c"), &toks("a b c")), 0);
        assert_eq!(levenshtein(&toks(""), &toks("a b c d")), 4);
        assert_eq!(levenshtein(&toks("a b c"), &toks("a x c d")), 2);
        assert_eq!(levenshtein(&toks("a"), &toks("A")), 1);
    }

    #[test]
    fn swap_costs_one_shift() {
        let t = ter(&toks("b a"), &toks("a b"));
        assert_eq!(t.shifts, 1);
        assert_eq!(t.score, 0.5);
        let t = ter(&toks("a b c d"), &toks("a c b d"));
        assert_eq!((t.shifts, t.edits()), (1, 1));
        assert_eq!(t.score, 0.25);
    }

    #[test]
    fn identity_scores_zero() {
        assert_eq!(ter(&toks("x y z"), &toks("x y z")).score, 0.0);
    }

    #[test]
    fn breakdown_adds_up() {
        let t = ter(&toks("a q b"), &toks("a b c d"));
        assert_eq!(
            t.insertions + t.deletions + t.substitutions,
            levenshtein(&toks("a q b"), &toks("a b c d"))
        );
        assert_eq!(t.score, t.edits() as f64 / 4.0);
    }

    #[test]
    fn shift_moves_block() {
        assert_eq!(apply_shift(&[1, 2, 3, 4, 5], 0, 2, 3), vec![3, 4, 5, 1, 2]);
        assert_eq!(apply_shift(&[1, 2, 3, 4, 5], 3, 1, 0), vec![4, 1, 2, 3, 5]);
    }
}
