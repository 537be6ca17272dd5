use std::path::PathBuf;

use bubble_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("config: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("not converged: {0}")]
    NotConverged(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for bad input, 3 for numerical failure, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Usage(_) => 2,
            CliError::Core(e) => match e {
                CoreError::NonPositive { .. }
                | CoreError::Feller { .. }
                | CoreError::Domain(_)
                | CoreError::Regime(_) => 2,
                CoreError::NonConvergence { .. } | CoreError::Evaluation { .. } | CoreError::Scheme(_) => 3,
                CoreError::Consistency(_) => 1,
            },
            CliError::NotConverged(_) => 3,
            CliError::Io { .. } | CliError::CheckFailed(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
