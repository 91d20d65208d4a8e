use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("validator set is empty")]
    EmptySet,

    #[error("duplicate validator address `{0}`")]
    DuplicateAddress(String),

    #[error("validator `{0}` has zero stake")]
    ZeroStake(String),

    #[error("validator `{0}` has a negative stake")]
    NegativeStake(String),

    #[error("{what} out of range: {detail}")]
    OutOfRange { what: &'static str, detail: String },

    #[error("validator index {index} out of range for a set of {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("validator index {0} appears more than once")]
    DuplicateIndex(usize),

    #[error("invalid simulation horizon: {0}")]
    InvalidHorizon(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("schema error at `{field}`: {reason}")]
    Schema { field: String, reason: String },

    #[error("network error: {0}")]
    Network(String),

    #[error("pagination error: {0}")]
    Pagination(String),

    #[error("malformed response: {0}")]
    MalformedResponse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn schema(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Schema {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code for the CLI: 2 for anything that came off the
    /// network, 1 for every data or validation failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Network(_) | Error::Pagination(_) | Error::MalformedResponse(_) => 2,
            _ => 1,
        }
    }
}
