//! Case-sensitive TER with block shifts and corpus BLEU over
//! whitespace-tokenised text.

mod bleu;
mod ter;

use std::path::Path;

use serde::Serialize;

pub use bleu::{corpus_bleu, sentence_bleu, BleuStats, MAX_ORDER};
pub use ter::{apply_shift, levenshtein, ter, TerBreakdown, MAX_SHIFT_DISTANCE, MAX_SHIFT_SPAN};

use crate::corpus::read_lines;
use crate::error::{Error, Result};

/// A hypothesis and its reference, tokens compared exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalPair {
    pub hypothesis: Vec<String>,
    pub reference: Vec<String>,
}

impl EvalPair {
    pub fn new(hypothesis: Vec<String>, reference: Vec<String>) -> Self {
        Self {
            hypothesis,
            reference,
        }
    }

    pub fn from_lines(hypothesis: &str, reference: &str) -> Self {
        let split = |s: &str| s.split_whitespace().map(str::to_owned).collect();
        Self::new(split(hypothesis), split(reference))
    }
}

/// Micro-averaged TER: summed edits over summed reference lengths.
pub fn corpus_ter(pairs: &[EvalPair]) -> Result<TerBreakdown> {
    let mut total = TerBreakdown::default();
    for (i, p) in pairs.iter().enumerate() {
        if p.reference.is_empty() {
            return Err(Error::Input(format!("reference {} is empty", i + 1)));
        }
        total.accumulate(&ter(&p.hypothesis, &p.reference));
    }
    Ok(total)
}

/// Corpus scores as reported by `ape eval`; both on a 0–100 scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub ter: f64,
    pub bleu: f64,
    pub sentences: usize,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serialises")
    }

    pub fn table(&self) -> String {
        format!(
            "{:>10} {:>8} {:>8}\n{:>10} {:>8.2} {:>8.2}\n",
            "sentences", "TER", "BLEU", self.sentences, self.ter, self.bleu
        )
    }
}

pub fn evaluate_pairs(pairs: &[EvalPair]) -> Result<EvalReport> {
    if pairs.is_empty() {
        return Err(Error::Input("nothing to evaluate".into()));
    }
    let t = corpus_ter(pairs)?;
    let refs: Vec<(&[String], &[String])> = pairs
        .iter()
        .map(|p| (p.hypothesis.as_slice(), p.reference.as_slice()))
        .collect();
    Ok(EvalReport {
        ter: 100.0 * t.score,
        bleu: corpus_bleu(&refs),
        sentences: pairs.len(),
    })
}

/// Scores a hypothesis file against a reference file, line by line.
pub fn evaluate_corpus(hyp_file: &Path, ref_file: &Path) -> Result<EvalReport> {
    let hyps = read_lines(hyp_file)?;
    let refs = read_lines(ref_file)?;
    if hyps.len() != refs.len() {
        return Err(Error::Input(format!(
            "hypothesis file has {} lines, reference file has {}",
            hyps.len(),
            refs.len()
        )));
    }
    let pairs: Vec<EvalPair> = hyps
        .into_iter()
        .zip(refs)
        .map(|(h, r)| EvalPair::new(h, r))
        .collect();
    evaluate_pairs(&pairs)
}
