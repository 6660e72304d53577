//! Error type shared across the library.

use thiserror::Error;

/// Errors raised by exact operations.
#[derive(Debug, Error)]
pub enum CalcError {
    /// Two objects were combined that live over different dimensions or
    /// incompatible variable sets.
    #[error("incompatible operands: {0}")]
    Incompatible(String),

    /// An operation needed exponents in a particular lattice (for example
    /// integers rather than half-integers) and the input was outside it.
    #[error("exponent constraint violated: {0}")]
    BadExponent(String),

    /// The tracked degree window of the input does not cover the degrees the
    /// operation needs, so the result could not be certified exact.
    #[error("degree window too small: {0}")]
    WindowTooSmall(String),

    /// A substitution or contraction whose structural precondition (bounded
    /// pole depth after assembly) failed.
    #[error("substitution guard failed: {0}")]
    SubstitutionGuard(String),

    /// A truncation bound (particle number or per-factor degree) was exceeded.
    #[error("truncation bound exceeded: {0}")]
    Truncation(String),

    /// Malformed textual or JSON input.
    #[error("parse error: {0}")]
    Parse(String),

    /// The requested operation is not defined for the given dimension.
    #[error("dimension not supported: {0}")]
    Dimension(String),
}

pub type Result<T> = std::result::Result<T, CalcError>;
