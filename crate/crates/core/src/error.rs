use thiserror::Error;

/// Errors raised by the algebra, the solvers and the run orchestration.
#[derive(Debug, Error)]
pub enum QsocError {
    /// A size limit (generator cap, superoperator budget, enumeration budget) was exceeded.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// An argument lies outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two operands live on different algebras.
    #[error("algebra mismatch: {0}")]
    AlgebraMismatch(String),

    /// An element has a blade outside the subalgebra it must live in.
    #[error("adaptedness violation: {0}")]
    Adaptedness(String),

    #[error("length mismatch: expected {expected}, got {actual} ({what})")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("missing callback `{0}`")]
    MissingCallback(&'static str),

    /// A control is outside the admissible set.
    #[error("inadmissible control: {0}")]
    Inadmissible(String),

    /// Inputs that are individually valid but inconsistent with each other.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("step size error: {0}")]
    StepSize(String),

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = QsocError> = std::result::Result<T, E>;
