use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: expected {expected} representation")]
    Domain { expected: &'static str },

    #[error("parameter mismatch: {0}")]
    ParameterMismatch(String),

    #[error("unsupported parameters: {0}")]
    UnsupportedParameters(String),

    #[error("encoding error: {0}")]
    Encoding(String),

    #[error("value {value} does not fit the centered range of modulus {modulus}")]
    Overflow { value: String, modulus: String },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("key error: {0}")]
    Key(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("invalid preset {id}: {reason}")]
    PresetInvalid { id: String, reason: String },

    #[error("unknown preset {0}")]
    UnknownPreset(String),

    #[error("incomplete result: {0}")]
    IncompleteResult(String),

    #[error("format error at byte {offset}: {reason}")]
    Format { offset: u64, reason: String },

    #[error("model error: {0}")]
    Model(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn mismatch(msg: impl Into<String>) -> Self {
        Error::ParameterMismatch(msg.into())
    }

    pub fn format(offset: u64, reason: impl Into<String>) -> Self {
        Error::Format {
            offset,
            reason: reason.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Format { .. } | Error::Model(_) => 2,
            Error::ParameterMismatch(_)
            | Error::UnsupportedParameters(_)
            | Error::PresetInvalid { .. }
            | Error::UnknownPreset(_)
            | Error::Domain { .. }
            | Error::Key(_)
            | Error::IncompleteResult(_) => 3,
            Error::Capacity(_) | Error::Overflow { .. } | Error::Verification(_) => 4,
            Error::Encoding(_) | Error::Shape(_) | Error::Io(_) => 1,
        }
    }
}
