use thiserror::Error;

/// Errors raised by the model, the mechanisms and the checkers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid setting: {0}")]
    InvalidSetting(String),

    #[error("invalid preference order: {0}")]
    InvalidOrder(String),

    #[error("unknown object `{0}`")]
    UnknownObject(String),

    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),

    #[error("parse error at {entry}: {message}")]
    Parse { entry: String, message: String },

    #[error("{what} too large: {size} exceeds the cap of {cap}")]
    CapExceeded { what: &'static str, size: u128, cap: u128 },

    #[error("profile not covered by the table mechanism")]
    MissingProfile,

    #[error("symmetry reduction `{requested}` not supported: {reason}")]
    Symmetry { requested: String, reason: String },

    #[error("precondition failed: mechanism is not {axiom}")]
    Precondition {
        axiom: String,
        witness: Box<crate::axioms::Witness>,
    },

    #[error("mechanism is not r-partially strategyproof for any r in (0,1]: {0}")]
    NoPositiveBound(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(entry: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            entry: entry.into(),
            message: message.into(),
        }
    }
}
