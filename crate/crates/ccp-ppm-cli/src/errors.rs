//! CLI error classification and exit codes.

use std::fmt;

use ccp_ppm::CcpError;

/// Errors grouped by exit code: 2 for configuration problems, 3 for
/// data problems, 4 for numerical failures.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Numerical(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn config(e: impl fmt::Display) -> Self {
        CliError::Config(e.to_string())
    }

    pub fn data(e: impl fmt::Display) -> Self {
        CliError::Data(e.to_string())
    }

    /// Classifies a pipeline error: numerical failures keep their own
    /// exit code, everything else surfaced mid-pipeline is a data
    /// problem.
    pub fn pipeline(e: CcpError) -> Self {
        match e {
            CcpError::Numerical(_) | CcpError::QuadratureNonConvergence { .. } => {
                CliError::Numerical(e.to_string())
            }
            other => CliError::Data(other.to_string()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;
