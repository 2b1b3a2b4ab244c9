use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("property failure: {0}")]
    Property(String),
    #[error("io: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Validation(_) => 2,
            CliError::Property(_) => 3,
            CliError::Io(_) => 4,
        })
    }

    pub fn validation(e: impl std::fmt::Display) -> Self {
        CliError::Validation(e.to_string())
    }
}

macro_rules! validation_from {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::validation(e)
            }
        })*
    };
}

validation_from!(
    secure_regen::AdversaryError,
    secure_regen::AnalysisError,
    secure_regen::CodeError,
    secure_regen::DssError,
    secure_regen::FieldError,
    secure_regen::PlacementError,
    secure_regen::RlncError
);
