use thiserror::Error;

use crate::space::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the operation's domain (negative lambda, bad index, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid mm-space: {0}")]
    Invalid(ValidationReport),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// The exact solver refuses instances above its configured size.
    #[error("size limit exceeded: {what} is {size}, limit {limit}")]
    SizeLimit {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    /// A result failed one of its own postconditions.
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
