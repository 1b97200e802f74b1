use thiserror::Error;

use crate::numerics::LiteralError;

/// Every failure the toolkit reports.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MdpError {
    #[error(transparent)]
    Literal(#[from] LiteralError),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("{0}")]
    Validation(String),

    #[error("invalid decision rule at state {state}: action {action} is not enabled")]
    InvalidRule { state: usize, action: usize },

    #[error("{0}")]
    UnsupportedBackend(String),

    #[error("singular matrix: no nonzero pivot in column {column}")]
    Singular { column: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("division by {divisor} is below the denormal guard")]
    DivisionGuard { divisor: String },

    #[error("initial values are not conservative at state {state}: v > L(v)")]
    ConservativeStart { state: usize },

    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("splitting check failed: {0}")]
    Splitting(String),

    #[error("enumeration cap exceeded: {rules} rules > {cap}")]
    EnumerationCap { rules: u128, cap: u128 },

    #[error("not certified: {0}")]
    NotCertified(String),

    #[error("invalid certificate: {field}: {reason}")]
    InvalidCertificate { field: &'static str, reason: String },

    #[error("usage: {0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, MdpError>;
