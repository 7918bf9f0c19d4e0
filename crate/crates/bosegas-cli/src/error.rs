//! CLI error type carrying the exit-status class.

use thiserror::Error;

/// Exit-status classes: configuration errors (2), precondition violations
/// (3), solver failures (4), inconclusive oracle verdicts (5).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitKind {
    Config,
    Precondition,
    Solver,
    Inconclusive,
}

impl ExitKind {
    pub fn code(self) -> i32 {
        match self {
            ExitKind::Config => 2,
            ExitKind::Precondition => 3,
            ExitKind::Solver => 4,
            ExitKind::Inconclusive => 5,
        }
    }
}

#[derive(Debug, Error)]
#[error("{message}")]
pub struct CliError {
    pub kind: ExitKind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ExitKind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }

    pub fn io(e: std::io::Error) -> Self {
        Self::new(ExitKind::Solver, format!("io error: {e}"))
    }
}

impl From<bosegas::error::ScatteringError> for CliError {
    fn from(e: bosegas::error::ScatteringError) -> Self {
        use bosegas::error::ScatteringError::*;
        match e {
            EllTooSmall { .. } | OmegaSingularity => Self::new(ExitKind::Precondition, e.to_string()),
            BracketNotFound { .. } => Self::new(ExitKind::Solver, e.to_string()),
        }
    }
}

impl From<bosegas::error::CondensateError> for CliError {
    fn from(e: bosegas::error::CondensateError) -> Self {
        Self::new(ExitKind::Precondition, e.to_string())
    }
}

impl From<bosegas::error::GridError> for CliError {
    fn from(e: bosegas::error::GridError) -> Self {
        Self::new(ExitKind::Precondition, e.to_string())
    }
}

impl From<bosegas::error::KernelFamilyError> for CliError {
    fn from(e: bosegas::error::KernelFamilyError) -> Self {
        Self::new(ExitKind::Precondition, e.to_string())
    }
}

impl From<bosegas::error::BogoliubovError> for CliError {
    fn from(e: bosegas::error::BogoliubovError) -> Self {
        Self::new(ExitKind::Solver, e.to_string())
    }
}

impl From<bosegas::error::FockError> for CliError {
    fn from(e: bosegas::error::FockError) -> Self {
        use bosegas::error::FockError::*;
        match e {
            Inconclusive { .. } => Self::new(ExitKind::Inconclusive, e.to_string()),
            DimensionOverflow { .. } => Self::new(ExitKind::Config, e.to_string()),
            _ => Self::new(ExitKind::Precondition, e.to_string()),
        }
    }
}

impl From<bosegas::error::CltError> for CliError {
    fn from(e: bosegas::error::CltError) -> Self {
        Self::new(ExitKind::Precondition, e.to_string())
    }
}

impl From<bosegas::error::SnapshotError> for CliError {
    fn from(e: bosegas::error::SnapshotError) -> Self {
        Self::new(ExitKind::Solver, e.to_string())
    }
}
