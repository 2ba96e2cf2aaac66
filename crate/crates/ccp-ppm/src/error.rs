//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by model construction, inference, and persistence.
#[derive(Debug, Error)]
pub enum CcpError {
    /// Input violates a documented precondition (lengths, ranges, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Input is structurally valid but degenerate for the requested
    /// operation (constant series, vanishing probabilities, ...).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// A numerical routine failed to reach its target accuracy or
    /// produced non-finite intermediates.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Adaptive quadrature stopped before reaching the requested
    /// absolute tolerance.
    #[error(
        "quadrature did not converge: achieved {achieved:.3e} > requested {requested:.3e} \
         after {evaluations} integrand evaluations"
    )]
    QuadratureNonConvergence {
        achieved: f64,
        requested: f64,
        evaluations: usize,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CcpError>;
