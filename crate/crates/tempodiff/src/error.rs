use std::path::PathBuf;

/// Failures of the pipeline and command line, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Core(#[from] tempodiff_core::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    /// 1 for usage and invalid settings, 3 for non-finite numerics, 2 for
    /// everything related to data and files.
    pub fn exit_code(&self) -> i32 {
        use tempodiff_core::Error as E;
        match self {
            CliError::Usage(_) | CliError::Core(E::Parameter(_)) => 1,
            CliError::Core(E::NonFinite(_)) => 3,
            _ => 2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 1);
        assert_eq!(
            CliError::from(tempodiff_core::Error::NonFinite("adamw_step")).exit_code(),
            3
        );
        assert_eq!(CliError::format("a.csv", "bad").exit_code(), 2);
        assert_eq!(
            CliError::from(tempodiff_core::Error::Degenerate("flat".into())).exit_code(),
            2
        );
    }
}
