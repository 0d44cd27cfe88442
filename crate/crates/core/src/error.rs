use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration field is missing or violates its invariant.
    #[error("invalid configuration at `{field}`: {message}")]
    Config { field: String, message: String },

    /// An operation was applied to a device kind that does not support it.
    #[error("device kind {kind} does not support {operation}")]
    Kind {
        kind: &'static str,
        operation: &'static str,
    },

    /// The feasible region of a (sub)problem is empty.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// The inner solver failed at a given outer iteration.
    #[error("solver failure at iteration {iteration}: {message}")]
    Solver { iteration: usize, message: String },

    #[error("grid of {points} points exceeds the cap of {cap}")]
    GridTooLarge { points: u128, cap: u128 },

    #[error("scenario parse error: {0}")]
    Parse(String),

    #[error("output error: {0}")]
    Output(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn domain(message: impl Into<String>) -> Self {
        Error::Domain(message.into())
    }
}
