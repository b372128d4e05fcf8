use std::path::PathBuf;

use synclab_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("schema error: {0}")]
    Schema(String),

    /// Rejected before integration starts.
    #[error("{0}")]
    Config(CoreError),

    /// Raised while integrating.
    #[error("numerical failure: {0}")]
    Numeric(CoreError),

    #[error("acceptance gate failed: {0}")]
    Gate(String),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        Self::Config(e)
    }
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// Classify an error from a simulation run.
    pub fn from_run(e: CoreError) -> Self {
        match e {
            CoreError::NonFiniteState { .. }
            | CoreError::NonFiniteDerivative { .. }
            | CoreError::SingularInertia { .. } => Self::Numeric(e),
            other => Self::Config(other),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io { .. } => 1,
            Self::Schema(_) | Self::Config(_) => 2,
            Self::Numeric(_) => 3,
            Self::Gate(_) => 4,
        }
    }
}
