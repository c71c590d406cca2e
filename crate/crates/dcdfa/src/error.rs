use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: left {left:?} vs right {right:?} in {op}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("matmul inner dimensions differ: {left:?} x {right:?}")]
    InnerDimMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("log of non-positive value {0}")]
    LogDomain(f64),

    #[error("division by zero element")]
    DivByZero,

    #[error("zero-norm feature vector")]
    ZeroNorm,

    #[error("backward requires a scalar loss, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),

    #[error("tensor is not on the active tape")]
    NotOnTape,

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("NaN gradient in parameter '{0}'")]
    NanGradient(String),

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("{0}")]
    Data(String),

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
