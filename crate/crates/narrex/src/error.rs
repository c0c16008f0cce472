use std::path::{Path, PathBuf};

use narrex_core::gateway::ServiceError;

/// Failures of the command-line tool, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("missing {artifact}; run the `{stage}` stage first")]
    MissingStage { stage: &'static str, artifact: PathBuf },
    #[error(transparent)]
    Core(narrex_core::Error),
    #[error(transparent)]
    Service(ServiceError),
}

impl From<narrex_core::Error> for AppError {
    fn from(e: narrex_core::Error) -> Self {
        match e {
            narrex_core::Error::Service(s) => AppError::Service(s),
            other => AppError::Core(other),
        }
    }
}

impl From<ServiceError> for AppError {
    fn from(e: ServiceError) -> Self {
        AppError::Service(e)
    }
}

impl AppError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 1 for usage and configuration problems, 2 for bad or missing data,
    /// 3 when the model service fails.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Usage(_) | AppError::Config(_) => 1,
            AppError::Data(_) | AppError::Io { .. } | AppError::MissingStage { .. } | AppError::Core(_) => 2,
            AppError::Service(s) => match s {
                ServiceError::InvalidRequest(_) => 1,
                ServiceError::MissingFixture { .. } | ServiceError::Cache(_) => 2,
                ServiceError::Upstream(_) | ServiceError::MalformedResponse(_) | ServiceError::DimensionMismatch { .. } => 3,
            },
        }
    }
}

pub type AppResult<T> = Result<T, AppError>;

pub fn read_text(path: &Path) -> AppResult<String> {
    std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))
}
