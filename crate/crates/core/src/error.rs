//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failures reported by evaluation, optimisation, verification and simulation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input value lies outside its admissible domain.
    #[error("invalid value for `{field}`: {reason}")]
    Domain { field: &'static str, reason: String },

    /// A bracketed root search found no sign change.
    #[error("no root of {what} in [{lo}, {hi}]")]
    NoRootInBracket { what: &'static str, lo: f64, hi: f64 },

    /// A constructed object contradicts the regime it was built for.
    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),

    /// Adaptive quadrature could not reach its tolerance.
    #[error("quadrature on [{a}, {b}] stopped at error estimate {estimate:e} above tolerance {tolerance:e}")]
    Quadrature {
        a: f64,
        b: f64,
        estimate: f64,
        tolerance: f64,
    },
}

impl Error {
    pub(crate) fn domain(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            field,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad input rather than numerical trouble.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Domain { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
