use crate::hilbert::Operator;

/// Errors raised by the simulation library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid Hilbert signature: {0}")]
    InvalidSignature(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("{what} is not Hermitian (max |A - A^dagger| = {deviation:e})")]
    NotHermitian { what: &'static str, deviation: f64 },

    #[error("superoperator block of dimension {block} exceeds the cap {cap}{hint}")]
    CapExceeded { block: usize, cap: usize, hint: String },

    #[error("generator couples symmetry sectors; the supplied charges are not conserved")]
    SectorViolation,

    #[error("physics abort at t = {time}: {reason}")]
    PhysicsAbort { time: f64, reason: String },

    #[error("solver failure: {reason} (residuals: {residuals:?})")]
    SolverFailure { reason: String, residuals: Vec<f64> },

    #[error("steady-state manifold is {} dimensional", basis.len())]
    DegenerateSteadyState { basis: Vec<Operator>, eigenvalues: Vec<faer::c64> },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
