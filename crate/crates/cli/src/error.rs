use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] hscs::Error),
    #[error("convergence failure: {0}")]
    Convergence(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// 2 for bad input, 3 for numerical failures, 4 for failed checks.
    pub fn exit_code(&self) -> i32 {
        use hscs::Error as E;
        match self {
            Self::Validation(_) | Self::Io { .. } => 2,
            Self::Core(e) => match e {
                E::NonPositiveInput(_)
                | E::IdenticalParticles
                | E::DegenerateCharges { .. }
                | E::GeometryViolation(_)
                | E::InvalidQuantumNumbers(_)
                | E::IndexOutOfRange(_)
                | E::MismatchedM { .. }
                | E::NullRotor
                | E::AboveBreakup(_)
                | E::InvalidConfig(_) => 2,
                _ => 3,
            },
            Self::Convergence(_) => 3,
            Self::Verification(_) => 4,
        }
    }
}
