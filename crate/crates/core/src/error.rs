use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A size bound (partition cap, truncation level, quadrature order) was exceeded.
    #[error("size error: {what} is {got}, limit is {limit}")]
    Size {
        what: &'static str,
        got: usize,
        limit: usize,
    },

    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("block classification is undefined for the crossing partition {0}")]
    Crossing(String),

    #[error("cumulant table has no entry for the tuple {0}")]
    IncompleteTable(String),

    /// The truncated Fock space is too small to evaluate a word exactly.
    #[error("truncation error: a word of length {length} needs {needed} levels, model has {available}")]
    Truncation {
        length: usize,
        needed: usize,
        available: usize,
    },

    #[error("degenerate model: {0}")]
    Degenerate(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    /// Malformed algebra specification; `path` locates the offending field.
    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
