use std::path::Path;

use lmar_core::LmarError;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_RUNTIME: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] LmarError),

    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Format(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Core(e) => match e {
                LmarError::InvalidConfig(_) => EXIT_USAGE,
                LmarError::EmbeddingNotPsd { .. } | LmarError::CovarianceNotPsd { .. } | LmarError::ContractViolation(_) => {
                    EXIT_RUNTIME
                }
                _ => EXIT_DOMAIN,
            },
            Self::Io { .. } | Self::Format(_) => EXIT_RUNTIME,
        }
    }

    /// Name printed first on standard error.
    pub fn name(&self) -> &'static str {
        match self {
            Self::Core(e) => e.name(),
            Self::Usage(_) => "UsageError",
            Self::Io { .. } => "IoError",
            Self::Format(_) => "FormatError",
        }
    }
}
