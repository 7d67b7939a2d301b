use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A tensor product or level embedding would exceed the configured
    /// dimension cap.
    #[error("capacity exceeded: dimension {dim} is above the cap {max}")]
    Capacity { dim: usize, max: usize },

    /// An iterative solver did not reach its tolerance.
    #[error("numeric failure in {routine}: {detail}")]
    Numeric { routine: &'static str, detail: String },

    /// Inputs violate an operation's precondition.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// Malformed values: non-bijective permutations, non-unitary matrices,
    /// mismatched alphabets.
    #[error("validation error: {0}")]
    Validation(String),

    /// An operation was applied outside its domain (e.g. the trace of an
    /// unbalanced polynomial).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A sampled sequence was queried past its last sample.
    #[error("index {index} is beyond the sampled depth {depth}")]
    Range { index: usize, depth: usize },

    /// A verdict-dependent operation was called with the wrong verdict.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The unitary handed to the peeling recursion is not of telescoped
    /// form at the named level.
    #[error("structural error at level {level}: {detail}")]
    Structural { level: usize, detail: String },

    /// Two evaluation routes that must agree did not.
    #[error("internal consistency failure: {0}")]
    InternalConsistency(String),

    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    /// Wraps the message with a location prefix, keeping the variant.
    pub fn context(self, ctx: &str) -> Self {
        match self {
            Error::Validation(m) => Error::Validation(format!("{ctx}: {m}")),
            Error::Precondition(m) => Error::Precondition(format!("{ctx}: {m}")),
            Error::Domain(m) => Error::Domain(format!("{ctx}: {m}")),
            Error::Contract(m) => Error::Contract(format!("{ctx}: {m}")),
            Error::InternalConsistency(m) => Error::InternalConsistency(format!("{ctx}: {m}")),
            Error::Numeric { routine, detail } => Error::Numeric {
                routine,
                detail: format!("{ctx}: {detail}"),
            },
            Error::Structural { level, detail } => Error::Structural {
                level,
                detail: format!("{ctx}: {detail}"),
            },
            other => other,
        }
    }
}
