//! Error taxonomy mapped to exit codes: 2 validation, 3 numeric, 4 I/O.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Numeric,
    Io,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Validation, message: message.into() }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Numeric, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Io, message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Validation => 2,
            ErrorKind::Numeric => 3,
            ErrorKind::Io => 4,
        }
    }

    pub fn kind_str(&self) -> &'static str {
        match self.kind {
            ErrorKind::Validation => "validation",
            ErrorKind::Numeric => "numeric",
            ErrorKind::Io => "io",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind_str(), self.message)
    }
}

impl std::error::Error for CliError {}

impl From<ggpop::weights::WeightError> for CliError {
    fn from(e: ggpop::weights::WeightError) -> Self {
        match e {
            ggpop::weights::WeightError::Domain(m) => CliError::validation(m),
            other => CliError::numeric(other.to_string()),
        }
    }
}

impl From<ggpop::partition::PartitionError> for CliError {
    fn from(e: ggpop::partition::PartitionError) -> Self {
        match e {
            ggpop::partition::PartitionError::Domain(m) => CliError::validation(m),
            other => CliError::numeric(other.to_string()),
        }
    }
}

impl From<ggpop::moran::MoranError> for CliError {
    fn from(e: ggpop::moran::MoranError) -> Self {
        match e {
            ggpop::moran::MoranError::Domain(m) => CliError::validation(m),
            other => CliError::numeric(other.to_string()),
        }
    }
}

impl From<ggpop::diffusion::DiffusionError> for CliError {
    fn from(e: ggpop::diffusion::DiffusionError) -> Self {
        match e {
            ggpop::diffusion::DiffusionError::Domain(m) => CliError::validation(m),
            other => CliError::numeric(other.to_string()),
        }
    }
}

impl From<ggpop::convergence::ConvergenceError> for CliError {
    fn from(e: ggpop::convergence::ConvergenceError) -> Self {
        match e {
            ggpop::convergence::ConvergenceError::Domain(m) => CliError::validation(m),
            other => CliError::numeric(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::io(e.to_string())
    }
}
