use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("unresolved identifier `{0}`")]
    Unresolved(String),

    #[error("domain error in `{expr}`: {message}")]
    Domain { expr: String, message: String },

    #[error("{0}")]
    Shape(String),

    #[error("degenerate metric: |det g| = {det:e}")]
    DegenerateMetric { det: f64 },

    #[error("metric signature {found:?} does not match the expected {expected:?}")]
    Signature {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("Taylor order exhausted: {0}")]
    OrderExhausted(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("no nonzero potential solves the trace condition for this tensor")]
    NoPotential,

    #[error("{location}: {message}")]
    Spec { location: String, message: String },

    #[error("unknown catalog entry `{0}`")]
    UnknownCatalog(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
