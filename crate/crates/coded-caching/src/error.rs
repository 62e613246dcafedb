use std::fmt;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Bad caller input (out-of-range value, unsorted list, malformed config).
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// A decoder could not reconstruct a required part.
    #[error("decode failure: {0}")]
    DecodeFailure(String),
    /// An internal invariant was violated (signals a bug, exit code 2).
    #[error("internal inconsistency: {0}")]
    Internal(String),
    /// I/O failure with path context.
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(msg: impl fmt::Display) -> Self {
        Error::InvalidInput(msg.to_string())
    }

    pub fn internal(msg: impl fmt::Display) -> Self {
        Error::Internal(msg.to_string())
    }

    /// Process exit code for the CLI: 1 for bad input, 2 for broken invariants.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::Io { .. } => 1,
            Error::DecodeFailure(_) | Error::Internal(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
