use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("eigendecomposition failed: {0}")]
    Decomposition(String),

    #[error("step state error: {0}")]
    State(String),

    #[error("solution blew up at step {step}")]
    BlowUp { step: usize },

    #[error("singular configuration: {0}")]
    SingularConfiguration(String),

    #[error("every point of the study blew up")]
    EmptyStudy,

    #[error("reference norm is zero")]
    ZeroReference,

    #[error("usage: {0}")]
    Usage(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
