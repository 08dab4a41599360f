use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Accumulated window energy vanished inside the reconstructed range.
    #[error("non-invertible STFT configuration: {0}")]
    NonInvertible(String),

    #[error("degenerate mel filterbank: {0}")]
    DegenerateFilterbank(String),

    #[error("malformed container: {0}")]
    MalformedContainer(String),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    #[error("unsupported encoding: {0}")]
    UnsupportedEncoding(String),

    #[error("unsupported size: {0}")]
    UnsupportedSize(String),

    /// Effect-chain syntax error. `position` is the index of the offending token.
    #[error("parse error at token {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
