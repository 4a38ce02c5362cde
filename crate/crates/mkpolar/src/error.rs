use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("channel is not symmetric: {0}")]
    SymmetryViolation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("enumeration budget exceeded: need {needed} accumulations, budget {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },

    #[error("kernel search exhausted after {tried} candidates without meeting the stop conditions")]
    SearchExhausted { tried: u64 },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("NaN in LLR input at position {0}")]
    NanInput(usize),

    #[error("at node {path:?}: {source}")]
    AtNode {
        path: Vec<usize>,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Strips node annotations.
    pub fn root_cause(&self) -> &Error {
        match self {
            Error::AtNode { source, .. } => source.root_cause(),
            e => e,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
