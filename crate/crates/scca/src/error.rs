use std::path::PathBuf;

pub type Result<T, E = AppError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error(transparent)]
    Core(#[from] scca_core::Error),
}

impl AppError {
    pub fn usage(msg: impl Into<String>) -> Self {
        AppError::Usage(msg.into())
    }

    /// 1 for usage, config and input problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        use scca_core::Error as E;
        match self {
            AppError::Core(
                E::Divergence { .. }
                | E::NotPositiveDefinite
                | E::SingularGram
                | E::ZeroVector
                | E::ZeroDenominator,
            ) => 2,
            _ => 1,
        }
    }
}
