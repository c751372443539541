use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    Dimension {
        op: &'static str,
        expected: String,
        got: String,
    },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("index {index} out of range for {op} (valid: {valid})")]
    Index {
        op: &'static str,
        index: usize,
        valid: String,
    },
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(
        op: &'static str,
        expected: impl Into<String>,
        got: impl Into<String>,
    ) -> Self {
        Error::Dimension {
            op,
            expected: expected.into(),
            got: got.into(),
        }
    }

    pub(crate) fn index(op: &'static str, index: usize, valid: impl Into<String>) -> Self {
        Error::Index {
            op,
            index,
            valid: valid.into(),
        }
    }
}
