use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed scenario: {0}")]
    Parse(String),

    /// A named model invariant does not hold.
    #[error("validation failed: {0}")]
    Validation(String),

    #[error("index out of range: {0}")]
    Index(String),

    /// The mobility chain of a user is reducible.
    #[error("mobility chain of user {user} is not ergodic: {reason}")]
    NotErgodic { user: usize, reason: String },

    #[error("trace contains no visits")]
    EmptyTrace,

    #[error("search space too large: {candidates} candidates exceeds cap {cap}")]
    TooLarge { candidates: u128, cap: u128 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("root relaxation is infeasible")]
    RelaxationInfeasible,

    #[error("solver {solver} does not support scheme {scheme}")]
    SchemeMismatch { solver: String, scheme: String },

    #[error("simplex cycled after {0} iterations")]
    CycleDetected(usize),

    #[error("invalid linear program: {0}")]
    InvalidLp(String),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
