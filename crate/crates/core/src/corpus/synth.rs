//! Synthetic post-editing benchmarks.
//!
//! Source-side tokens are drawn from `s0 s1 …` and target-side tokens from
//! `t0 t1 …`, so src and mt/pe never share a symbol even though they share
//! one vocabulary.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Vocabulary;
use crate::error::{Error, Result};
use crate::training::Triplet;

pub const MARKER_A: &str = "M_A";
pub const MARKER_B: &str = "M_B";
pub const AMBIGUOUS: &str = "X";
pub const RESOLVED_A: &str = "X_A";
pub const RESOLVED_B: &str = "X_B";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// pe = mt; src is unrelated noise.
    Copy,
    /// mt is pe with random substitutions; src is pe relabelled.
    Corrupt,
    /// mt holds an ambiguous token that only src can resolve.
    Disambiguate,
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "copy" => Ok(Task::Copy),
            "corrupt" => Ok(Task::Corrupt),
            "disambiguate" => Ok(Task::Disambiguate),
            _ => Err(Error::Config(format!(
                "unknown task {s:?} (expected copy, corrupt or disambiguate)"
            ))),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Copy => "copy",
            Task::Corrupt => "corrupt",
            Task::Disambiguate => "disambiguate",
        })
    }
}

/// Generator settings. Lengths count filler tokens; disambiguation adds one
/// marker to src and one ambiguous token to mt.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub task: Task,
    pub n: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Distinct filler symbols per side.
    pub alphabet: usize,
    /// Per-token substitution probability of the corrupt task.
    pub substitution_rate: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(task: Task, n: usize, seed: u64) -> Self {
        Self {
            task,
            n,
            min_len: 3,
            max_len: 8,
            alphabet: 12,
            substitution_rate: 0.2,
            seed,
        }
    }

    pub fn with_lengths(mut self, min_len: usize, max_len: usize) -> Self {
        self.min_len = min_len;
        self.max_len = max_len;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if self.min_len == 0 || self.min_len > self.max_len {
            return Err(Error::Config(format!(
                "bad length range {}..={}",
                self.min_len, self.max_len
            )));
        }
        if self.alphabet < 2 {
            return Err(Error::Config("alphabet needs at least 2 symbols".into()));
        }
        if !(0.0..=1.0).contains(&self.substitution_rate) {
            return Err(Error::Config("substitution rate outside [0, 1]".into()));
        }
        Ok(())
    }
}

/// One generated example as token strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthTriplet {
    pub src: Vec<String>,
    pub mt: Vec<String>,
    pub pe: Vec<String>,
}

impl SynthTriplet {
    /// Position of the ambiguous token in mt, if any.
    pub fn ambiguous_position(&self) -> Option<usize> {
        self.mt.iter().position(|t| t == AMBIGUOUS)
    }

    /// Position of the class marker in src, if any.
    pub fn marker_position(&self) -> Option<usize> {
        self.src.iter().position(|t| t == MARKER_A || t == MARKER_B)
    }
}

fn target_token(i: usize) -> String {
    format!("t{i}")
}

/// Relabels a target-side token into the source alphabet.
fn relabel(tok: &str) -> String {
    match tok.strip_prefix('t') {
        Some(rest) => format!("s{rest}"),
        None => tok.to_owned(),
    }
}

fn filler(rng: &mut ChaCha8Rng, spec: &SynthSpec) -> Vec<String> {
    let len = rng.random_range(spec.min_len..=spec.max_len);
    (0..len)
        .map(|_| target_token(rng.random_range(0..spec.alphabet)))
        .collect()
}

/// Generates `spec.n` triplets, deterministically for a given spec.
///
/// Disambiguation items come in pairs sharing one mt sentence, one pair
/// member marked `M_A` and the other `M_B`, so the two classes are exactly
/// balanced for every mt sentence. For odd `n` the last pair is cut short.
pub fn generate(spec: &SynthSpec) -> Result<Vec<SynthTriplet>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.n);
    while out.len() < spec.n {
        match spec.task {
            Task::Copy => {
                let mt = filler(&mut rng, spec);
                let src = filler(&mut rng, spec).iter().map(|t| relabel(t)).collect();
                out.push(SynthTriplet {
                    src,
                    pe: mt.clone(),
                    mt,
                });
            }
            Task::Corrupt => {
                let pe = filler(&mut rng, spec);
                let src = pe.iter().map(|t| relabel(t)).collect();
                let mt = pe
                    .iter()
                    .map(|t| {
                        if rng.random_bool(spec.substitution_rate) {
                            // Shift by a non-zero offset so the token really changes.
                            let cur: usize = t[1..].parse().expect("generated token");
                            let off = rng.random_range(1..spec.alphabet);
                            target_token((cur + off) % spec.alphabet)
                        } else {
                            t.clone()
                        }
                    })
                    .collect();
                out.push(SynthTriplet { src, mt, pe });
            }
            Task::Disambiguate => {
                let fill = filler(&mut rng, spec);
                let x_at = rng.random_range(0..=fill.len());
                let mut mt = fill.clone();
                mt.insert(x_at, AMBIGUOUS.to_owned());
                let src_fill: Vec<String> = fill.iter().map(|t| relabel(t)).collect();
                let first_a = rng.random_bool(0.5);
                for is_a in [first_a, !first_a] {
                    if out.len() == spec.n {
                        break;
                    }
                    let mut src = src_fill.clone();
                    let m_at = rng.random_range(0..=src.len());
                    src.insert(m_at, (if is_a { MARKER_A } else { MARKER_B }).to_owned());
                    let mut pe = mt.clone();
                    pe[x_at] = (if is_a { RESOLVED_A } else { RESOLVED_B }).to_owned();
                    out.push(SynthTriplet {
                        src,
                        mt: mt.clone(),
                        pe,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Shared vocabulary covering every token of `triplets`.
pub fn vocabulary(triplets: &[SynthTriplet]) -> Result<Vocabulary> {
    let lines: Vec<String> = triplets
        .iter()
        .flat_map(|t| [t.src.join(" "), t.mt.join(" "), t.pe.join(" ")])
        .collect();
    Vocabulary::build(lines.iter().map(String::as_str), usize::MAX, 1)
}

/// Encodes generated triplets with `vocab`.
pub fn encode(vocab: &Vocabulary, triplets: &[SynthTriplet]) -> Result<Vec<Triplet>> {
    triplets
        .iter()
        .map(|t| {
            Triplet::new(
                vocab.encode(&t.src),
                vocab.encode(&t.mt),
                vocab.encode(&t.pe),
            )
        })
        .collect()
}

/// Writes `src.txt`, `mt.txt` and `pe.txt` into `dir`.
pub fn write_triplets(dir: &Path, triplets: &[SynthTriplet]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, side) in [("src.txt", 0), ("mt.txt", 1), ("pe.txt", 2)] {
        let mut text = String::new();
        for t in triplets {
            let toks = match side {
                0 => &t.src,
                1 => &t.mt,
                _ => &t.pe,
            };
            text.push_str(&toks.join(" "));
            text.push('\n');
        }
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Generates a corpus and writes it to `dir`.
pub fn gen_synthetic(spec: &SynthSpec, dir: &Path) -> Result<Vec<SynthTriplet>> {
    let triplets = generate(spec)?;
    write_triplets(dir, &triplets)?;
    Ok(triplets)
}
