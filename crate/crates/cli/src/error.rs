use std::path::PathBuf;

use chipgyro_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// One message per offending field, each prefixed with its dot path.
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("{0}")]
    Core(#[from] CoreError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(vec![msg.into()])
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for configuration and validation problems, 2 when the physics has no answer.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(
                CoreError::NoGuide(_)
                | CoreError::NonSmoothPotential
                | CoreError::DegenerateOrientation
                | CoreError::Divergent { .. }
                | CoreError::Infeasible { .. }
                | CoreError::SingularPoint { .. },
            ) => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
