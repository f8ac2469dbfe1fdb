use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{BOS, EOS, PAD, UNK};

pub const SPECIALS: [&str; 4] = ["<pad>", "<unk>", "<s>", "</s>"];

/// Shared token inventory for src, mt and pe. Ids 0..4 are PAD, UNK, BOS, EOS.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Vocabulary from an ordered token list whose first four entries are
    /// the reserved markers.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < SPECIALS.len() || tokens[..4].iter().zip(SPECIALS).any(|(a, b)| a != b) {
            return Err(Error::Input(format!(
                "vocabulary must start with {SPECIALS:?}"
            )));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(Error::Input(format!(
                    "invalid vocabulary entry {t:?} at line {}",
                    i + 1
                )));
            }
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::Input(format!("duplicate vocabulary entry {t:?}")));
            }
        }
        Ok(Self { tokens, index })
    }

    /// Frequency-ranked vocabulary over every sentence given; ties are broken
    /// lexicographically. Tokens seen fewer than `min_freq` times, or beyond
    /// `max_size` entries (specials included), are left out and encode to UNK.
    pub fn build<'a, I>(sentences: I, max_size: usize, min_freq: usize) -> Result<Self>
    where
        I: IntoIterator<Item = &'a str>,
    {
        if max_size < 5 {
            return Err(Error::Config(format!("max vocabulary size {max_size} < 5")));
        }
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for line in sentences {
            for tok in line.split_whitespace() {
                *counts.entry(tok).or_default() += 1;
            }
        }
        if counts.is_empty() {
            return Err(Error::Input(
                "cannot build a vocabulary from an empty corpus".into(),
            ));
        }
        let mut ranked: Vec<(&str, usize)> = counts
            .into_iter()
            .filter(|&(t, c)| c >= min_freq.max(1) && !SPECIALS.contains(&t))
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let tokens = SPECIALS
            .iter()
            .copied()
            .chain(ranked.into_iter().map(|(t, _)| t))
            .take(max_size)
            .map(str::to_owned)
            .collect();
        Self::from_tokens(tokens)
    }

    /// Builds from the lines of text files.
    pub fn build_from_files<P: AsRef<Path>>(
        files: &[P],
        max_size: usize,
        min_freq: usize,
    ) -> Result<Self> {
        let mut texts = Vec::with_capacity(files.len());
        for f in files {
            let f = f.as_ref();
            texts.push(fs::read_to_string(f).map_err(|e| Error::io(f, e))?);
        }
        Self::build(texts.iter().flat_map(|t| t.lines()), max_size, min_freq)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }

    /// Whitespace-tokenises and encodes one line.
    pub fn encode_line(&self, line: &str) -> Vec<usize> {
        line.split_whitespace().map(|t| self.id(t)).collect()
    }

    pub fn decode(&self, ids: &[usize]) -> Vec<String> {
        ids.iter()
            .map(|&i| self.token(i).unwrap_or(SPECIALS[UNK]).to_owned())
            .collect()
    }

    /// Decodes generated ids into a sentence, dropping BOS / EOS / PAD.
    pub fn detokenize(&self, ids: &[usize]) -> String {
        let words: Vec<String> = ids
            .iter()
            .filter(|&&i| i != BOS && i != EOS && i != PAD)
            .map(|&i| self.token(i).unwrap_or(SPECIALS[UNK]).to_owned())
            .collect();
        words.join(" ")
    }

    /// One token per line, in id order.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = self.tokens.join("\n");
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_tokens(text.lines().map(str::to_owned).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequency_ranked_with_specials_first() {
        let v = Vocabulary::build(["a a b"], 6, 1).unwrap();
        assert_eq!(v.tokens(), ["<pad>", "<unk>", "<s>", "</s>", "a", "b"]);
        let v = Vocabulary::build(["a a b"], 5, 1).unwrap();
        assert_eq!(v.encode(&["a", "b"]), vec![4, UNK]);
    }

    #[test]
    fn ties_break_lexicographically() {
        let v1 = Vocabulary::build(["z y x", "x y z"], 10, 1).unwrap();
        let v2 = Vocabulary::build(["x y z", "z y x"], 10, 1).unwrap();
        assert_eq!(v1, v2);
        assert_eq!(&v1.tokens()[4..], ["x", "y", "z"]);
    }

    #[test]
    fn min_freq_and_empty_corpus() {
        let v = Vocabulary::build(["a a b"], 10, 2).unwrap();
        assert_eq!(v.len(), 5);
        assert!(matches!(
            Vocabulary::build(["  "], 10, 1),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn unknown_tokens_map_to_unk() {
        let v = Vocabulary::build(["a b"], 10, 1).unwrap();
        assert_eq!(v.encode_line("a Q b"), vec![v.id("a"), UNK, v.id("b")]);
        assert_eq!(v.detokenize(&[BOS, v.id("b"), EOS]), "b");
    }

    #[test]
    fn from_tokens_rejects_bad_lists() {
        assert!(Vocabulary::from_tokens(vec!["a".into()]).is_err());
        let mut t: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        t.push("a".into());
        t.push("a".into());
        assert!(Vocabulary::from_tokens(t).is_err());
    }
}
