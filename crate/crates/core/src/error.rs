use thiserror::Error;

use crate::domain::UnitId;

/// A designer parameter is missing, unknown, or outside its admissible bound.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("missing parameter `{0}`")]
    Missing(&'static str),
    #[error("unknown parameter `{0}`")]
    Unknown(String),
    #[error("{field}: {reason}")]
    Bound { field: &'static str, reason: String },
}

impl ConfigError {
    /// Name of the parameter the error refers to.
    pub fn field(&self) -> &str {
        match self {
            ConfigError::Missing(f) => f,
            ConfigError::Unknown(f) => f,
            ConfigError::Bound { field, .. } => field,
        }
    }
}

/// Record-level invariant violations raised by the smart constructors.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("risky_count {risky_count} exceeds persistence_lmt {persistence_lmt}")]
    RiskyCountOverLimit { risky_count: u32, persistence_lmt: u32 },
    #[error("iso_status must be isolated exactly when risky_count = persistence_lmt")]
    IsolationMismatch,
    #[error("risky_count must be zero exactly when the unit provides healthy data")]
    HealthyMismatch,
}

/// Errors from the voter transition functions.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VoterError {
    #[error("no output supplied for unit {0}")]
    MissingUnit(UnitId),
    #[error("output for unit {0} is not part of the configuration")]
    UnexpectedUnit(UnitId),
    #[error("unit {0} appears more than once")]
    DuplicateUnit(UnitId),
    #[error("uid mismatch: expected unit {expected}, got unit {got}")]
    UidMismatch { expected: UnitId, got: UnitId },
    #[error("no unit provides healthy data in the first cycle")]
    NoHealthyUnit,
    #[error(transparent)]
    Domain(#[from] DomainError),
}
