use std::fs;
use std::path::{Path, PathBuf};

use super::Vocabulary;
use crate::error::{Error, Result};
use crate::training::Triplet;

/// Three parallel, line-aligned text files.
#[derive(Debug, Clone)]
pub struct CorpusHandle {
    pub src: PathBuf,
    pub mt: PathBuf,
    pub pe: PathBuf,
    lines: usize,
}

/// Whitespace-tokenised lines of one file.
pub fn read_lines(path: &Path) -> Result<Vec<Vec<String>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(|l| l.split_whitespace().map(str::to_owned).collect())
        .collect())
}

fn count_lines(path: &Path) -> Result<usize> {
    Ok(fs::read_to_string(path)
        .map_err(|e| Error::io(path, e))?
        .lines()
        .count())
}

impl CorpusHandle {
    pub fn open(
        src: impl Into<PathBuf>,
        mt: impl Into<PathBuf>,
        pe: impl Into<PathBuf>,
    ) -> Result<Self> {
        let (src, mt, pe) = (src.into(), mt.into(), pe.into());
        let counts = [count_lines(&src)?, count_lines(&mt)?, count_lines(&pe)?];
        if counts[0] != counts[1] || counts[1] != counts[2] {
            return Err(Error::Input(format!(
                "parallel files differ in length: src {} lines, mt {} lines, pe {} lines",
                counts[0], counts[1], counts[2]
            )));
        }
        Ok(Self {
            src,
            mt,
            pe,
            lines: counts[0],
        })
    }

    /// `src.txt`, `mt.txt`, `pe.txt` inside `dir`.
    pub fn in_dir(dir: &Path) -> Result<Self> {
        Self::open(dir.join("src.txt"), dir.join("mt.txt"), dir.join("pe.txt"))
    }

    pub fn lines(&self) -> usize {
        self.lines
    }

    pub fn files(&self) -> [&Path; 3] {
        [&self.src, &self.mt, &self.pe]
    }

    /// Shared vocabulary over all three sides.
    pub fn build_vocab(&self, max_size: usize, min_freq: usize) -> Result<Vocabulary> {
        Vocabulary::build_from_files(&self.files(), max_size, min_freq)
    }
}

/// Encoded triplets plus the number of lines dropped for a blank side.
#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub triplets: Vec<Triplet>,
    /// Line numbers (0-based) of the skipped triplets.
    pub skipped: Vec<usize>,
}

/// Reads and encodes every line triple. Triples with a blank side are skipped
/// with a warning.
pub fn load_triplets(handle: &CorpusHandle, vocab: &Vocabulary) -> Result<LoadedCorpus> {
    let [src, mt, pe] = handle.files().map(read_lines);
    let (src, mt, pe) = (src?, mt?, pe?);
    let mut triplets = Vec::with_capacity(handle.lines);
    let mut skipped = Vec::new();
    for (i, ((s, m), p)) in src.iter().zip(&mt).zip(&pe).enumerate() {
        if s.is_empty() || m.is_empty() || p.is_empty() {
            skipped.push(i);
            continue;
        }
        triplets.push(Triplet::new(
            vocab.encode(s),
            vocab.encode(m),
            vocab.encode(p),
        )?);
    }
    if !skipped.is_empty() {
        log::warn!("skipped {} triplets with a blank side", skipped.len());
    }
    Ok(LoadedCorpus { triplets, skipped })
}
