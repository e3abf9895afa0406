//! Error type shared by the whole crate.

/// Errors raised by model construction, numerical routines, and runners.
///
/// `Input` covers violated preconditions (dimension mismatches, empty data,
/// out-of-range arguments); `Numerical` covers failures discovered while
/// computing (covariances that stay indefinite after jitter escalation,
/// overflow in warped moments, non-finite objective values).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
