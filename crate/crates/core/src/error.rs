use std::fmt;

use thiserror::Error;

/// Errors raised by every module of the crate.
///
/// The three variants map onto the CLI exit codes: rejected input is a usage
/// problem, the other two are numerical failures.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// An adaptive routine ran out of refinement budget. The best estimate and
    /// its error bound are kept so callers can decide whether to use them.
    #[error("accuracy target not reached ({context}): estimate {estimate:e}, error bound {error_bound:e}")]
    Accuracy {
        context: String,
        estimate: f64,
        error_bound: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// Prefix the error message with `ctx`, keeping the variant.
    pub fn context(self, ctx: impl fmt::Display) -> Self {
        match self {
            Error::InvalidInput(m) => Error::InvalidInput(format!("{ctx}: {m}")),
            Error::Numerical(m) => Error::Numerical(format!("{ctx}: {m}")),
            Error::Accuracy {
                context,
                estimate,
                error_bound,
            } => Error::Accuracy {
                context: format!("{ctx}: {context}"),
                estimate,
                error_bound,
            },
        }
    }
}
