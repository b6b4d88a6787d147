use thiserror::Error;

/// Errors raised by the state, measurement and information routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QdcError {
    #[error("invalid subsystem: {0}")]
    InvalidSubsystem(String),

    #[error("matrix is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotPositiveSemidefinite(f64),

    #[error("value out of domain: {0}")]
    DomainError(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    #[error("system entropy {0:e} is too small to normalize by")]
    DegenerateSystem(f64),

    #[error("invalid branch overlaps: {0}")]
    InvalidOverlaps(String),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("register of {requested} qubits exceeds the dense limit of {limit}")]
    RegisterTooLarge { requested: usize, limit: usize },

    #[error("fragment of {requested} qubits exceeds the cap of {limit}")]
    FragmentTooLarge { requested: usize, limit: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),
}

pub type Result<T> = std::result::Result<T, QdcError>;
