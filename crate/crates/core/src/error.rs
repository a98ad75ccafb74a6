use thiserror::Error;

/// Errors raised by the library.
///
/// The CLI maps [`Error::Contract`] and parse failures to exit code 2 and
/// [`Error::Budget`] to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("resource budget `{budget}` exceeded: {detail}")]
    Budget {
        budget: &'static str,
        detail: String,
    },

    #[error("indeterminate result: {0}")]
    Indeterminate(String),

    #[error("integer overflow in {0}")]
    Overflow(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn budget(budget: &'static str, detail: impl Into<String>) -> Self {
        Error::Budget {
            budget,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
