use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {lhs:?} vs {rhs:?}")]
    Dimension {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    #[error("softmax row {row} has no finite entry")]
    DegenerateRow { row: usize },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("gradient graph already consumed by a previous backward pass")]
    GraphConsumed,

    #[error("token id {id} outside vocabulary of size {size}")]
    Vocabulary { id: usize, size: usize },

    #[error("wiring error: expected {expected} states, got {found}")]
    Wiring {
        expected: &'static str,
        found: &'static str,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("bad checkpoint magic {found:?}")]
    BadMagic { found: Vec<u8> },

    #[error("unsupported checkpoint version {found} (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },

    #[error("checkpoint truncated: {0}")]
    Truncated(String),

    #[error("malformed checkpoint header: {0}")]
    Header(String),

    #[error("vocabulary has {vocab} entries but config declares vocab_size {config}")]
    VocabSizeMismatch { vocab: usize, config: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn dim(op: &'static str, lhs: &[usize], rhs: &[usize]) -> Self {
        Error::Dimension {
            op,
            lhs: lhs.to_vec(),
            rhs: rhs.to_vec(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Numeric(_) => 3,
            _ => 2,
        }
    }
}
