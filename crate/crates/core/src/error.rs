use std::io;

use crate::gf2::Gf2Error;
use crate::wire::WireError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
    #[error("unsupported degree m = {0}")]
    UnsupportedDegree(usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("master matrix order check failed: expected {expected}, got {got}")]
    OrderVerificationFailed { expected: String, got: String },
    #[error("retry bound exhausted while {0}")]
    RetryExhausted(&'static str),
    #[error("{a} is not invertible modulo {modulus}")]
    NotCoprime { a: String, modulus: String },
    #[error("malformed message: {0}")]
    MalformedMessage(String),
    #[error("decode failed: {0}")]
    Decode(#[from] WireError),
    #[error("alice and bob derived different keys")]
    KeyMismatch,
    #[error("peer timed out")]
    Timeout,
    #[error("transport error: {0}")]
    Io(#[source] io::Error),
    #[error("discrete log of {what} has no solution")]
    DlogFailed { what: String },
    #[error("{0}")]
    Unsatisfiable(&'static str),
    #[error("parameter too large for exhaustive analysis: {0}")]
    ParameterTooLarge(String),
    #[error("peer worker panicked")]
    WorkerPanicked,
}

impl Error {
    /// Structural decode failures and semantic validation failures alike.
    pub fn is_malformed(&self) -> bool {
        matches!(self, Error::MalformedMessage(_) | Error::Decode(_))
    }
}

impl From<io::Error> for Error {
    fn from(e: io::Error) -> Self {
        match e.kind() {
            io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut => Error::Timeout,
            _ => Error::Io(e),
        }
    }
}
