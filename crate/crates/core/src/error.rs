use thiserror::Error;

/// Errors raised by the decomposition library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed or invalid input (non-finite entries, non-square matrices, bad arguments).
    #[error("input error: {0}")]
    Input(String),

    /// Operands do not share the ambient dimension.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A property name that is not registered.
    #[error("unknown property `{0}`")]
    UnknownProperty(String),

    /// Tuple length does not match the arity of a property spec.
    #[error("arity mismatch: property `{property}` needs {expected} tuple entries, got {found}")]
    ArityMismatch {
        property: String,
        expected: usize,
        found: usize,
    },

    /// An operation precondition was violated; `residual` is the measured violation.
    #[error("precondition failed: {what} (residual {residual:.3e})")]
    Precondition { what: String, residual: f64 },

    /// The reducing-subspace iteration did not stabilize.
    #[error("numerical instability: subspace iteration did not stabilize, dimension trace {trace:?}")]
    NumericalInstability { trace: Vec<usize> },

    /// A cross-check between two routes disagreed beyond tolerance.
    #[error("internal consistency failure: {0}")]
    InternalConsistency(String),

    /// A fixture generator could not certify the instance it built.
    #[error("generator error: {0}")]
    Generator(String),

    /// Syntax error in a functional expression.
    #[error("parse error at column {column}: {message}")]
    Parse { column: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
