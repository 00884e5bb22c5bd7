//! Error type shared across the library.

use std::path::PathBuf;
use thiserror::Error;

/// Coarse classification used by callers (e.g. to pick process exit codes).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad configuration: unknown names, invalid parameters, missing wordlists.
    Config,
    /// The data cannot satisfy the request: empty splits, infeasible samples.
    Data,
    /// Underlying I/O failure.
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Data(String),

    /// A stratified sample asked for more reviews of one star than exist.
    #[error("cannot draw {needed} reviews with rating {star}: only {available} available")]
    InfeasibleSample {
        star: u8,
        needed: usize,
        available: usize,
    },

    /// A slang wordlist mapped the same token twice.
    #[error("duplicate slang key {key:?} in {path}")]
    DuplicateSlangKey { key: String, path: PathBuf },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. } => ErrorKind::Io,
            Error::Config(_) | Error::DuplicateSlangKey { .. } => ErrorKind::Config,
            Error::Data(_) | Error::InfeasibleSample { .. } => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
