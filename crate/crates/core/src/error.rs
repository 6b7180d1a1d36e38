use thiserror::Error;

/// Malformed textual or JSON input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error: {message}")]
pub struct ParseError {
    pub message: String,
}

impl ParseError {
    pub fn new(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("division by zero")]
    DivisionByZero,

    #[error("variable mismatch: expected {expected}, found {found}")]
    VariableMismatch { expected: String, found: String },

    #[error("series is not invertible: {0}")]
    NotInvertible(String),

    /// The requested order cannot be certified from the data supplied.
    /// `achievable` is the largest order that can be produced, when known.
    #[error("insufficient precision: {what} (achievable order: {achievable:?})")]
    InsufficientPrecision {
        what: String,
        achievable: Option<i64>,
    },

    #[error("missing data: {0}")]
    MissingData(String),

    #[error("inconsistent input: {0}")]
    Inconsistent(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("dependency cycle through {0}")]
    Cycle(String),
}

impl Error {
    pub(crate) fn precision(what: impl Into<String>, achievable: Option<i64>) -> Self {
        Error::InsufficientPrecision {
            what: what.into(),
            achievable,
        }
    }

    pub(crate) fn invalid(what: impl Into<String>) -> Self {
        Error::Invalid(what.into())
    }

    /// Short machine-readable tag used in error documents.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse(_) => "parse",
            Error::DivisionByZero => "division-by-zero",
            Error::VariableMismatch { .. } => "variable-mismatch",
            Error::NotInvertible(_) => "not-invertible",
            Error::InsufficientPrecision { .. } => "insufficient-precision",
            Error::MissingData(_) => "missing-data",
            Error::Inconsistent(_) => "inconsistent",
            Error::Singular(_) => "singular",
            Error::Invalid(_) => "invalid",
            Error::Cycle(_) => "cycle",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
