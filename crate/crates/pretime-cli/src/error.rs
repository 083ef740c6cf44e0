//! Process-level error type with the documented exit-code contract:
//! 2 validation, 3 quadrature tolerance, 4 integrator collapse,
//! 1 verification/reproduction failure or I/O trouble.

use std::fmt;

use pretime::{BoundsError, ParamError, QuadratureError, SimError};

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Tolerance(String),
    Collapse(String),
    CheckFailed(String),
    Io(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            Self::Validation(_) => 2,
            Self::Tolerance(_) => 3,
            Self::Collapse(_) => 4,
            Self::CheckFailed(_) | Self::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Validation(m)
            | Self::Tolerance(m)
            | Self::Collapse(m)
            | Self::CheckFailed(m)
            | Self::Io(m) => write!(f, "{m}"),
        }
    }
}

impl From<ParamError> for CliError {
    fn from(e: ParamError) -> Self {
        Self::Validation(e.to_string())
    }
}

impl From<BoundsError> for CliError {
    fn from(e: BoundsError) -> Self {
        Self::Validation(e.to_string())
    }
}

impl From<QuadratureError> for CliError {
    fn from(e: QuadratureError) -> Self {
        match e {
            QuadratureError::ToleranceNotMet { .. } => Self::Tolerance(e.to_string()),
            _ => Self::Validation(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::StepCollapse { .. } => Self::Collapse(e.to_string()),
            SimError::InvalidInput { .. } => Self::Validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}
