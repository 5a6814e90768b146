use std::path::Path;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {message}")]
    Input { path: String, message: String },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Core(#[from] dyncomm_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn input(path: impl AsRef<Path>, message: impl Into<String>) -> Self {
        Self::Input { path: path.as_ref().display().to_string(), message: message.into() }
    }

    /// 1 usage error, 2 input error, 3 internal invariant violation.
    pub fn exit_code(&self) -> i32 {
        use dyncomm_core::Error as E;
        match self {
            CliError::Usage(_) => 1,
            CliError::Input { .. } | CliError::Io(_) | CliError::Csv(_) => 2,
            CliError::Invariant(_) => 3,
            CliError::Core(e) => match e {
                E::InvalidParams(_) => 1,
                E::VertexOutOfRange { .. }
                | E::InvalidWeight { .. }
                | E::MissingArc { .. }
                | E::DuplicateArc { .. }
                | E::WeightMismatch { .. }
                | E::AsymmetricBatch { .. }
                | E::AsymmetricGraph { .. }
                | E::ZeroTotalWeight
                | E::Capacity(_) => 2,
                _ => 3,
            },
        }
    }
}
