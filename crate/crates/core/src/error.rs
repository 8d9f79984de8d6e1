use thiserror::Error;

/// Crate-wide error type.
///
/// Every fallible operation returns one of these variants; the CLI maps them
/// onto exit codes (config problems -> 2, solver failures -> 1).
#[derive(Debug, Error)]
pub enum Error {
    /// A mathematical precondition on an argument was violated
    /// (non-symmetric strain input, point outside the domain, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Scaling-regime parameters outside the admissible range, or an
    /// operation that only exists in part of the regime plane.
    #[error("regime error: {0}")]
    Regime(String),

    /// Junction/clamping constraint violated by supplied data.
    #[error("constraint error: {0}")]
    Constraint(String),

    /// Invalid mesh description (junction not on a grid line, degenerate
    /// counts, ...).
    #[error("mesh error: {0}")]
    Mesh(String),

    /// Configuration file could not be parsed or validated.
    #[error("config error: {0}")]
    Config(String),

    /// Force table ingestion failed (unsorted abscissae, non-finite values).
    #[error("force data error: {0}")]
    ForceData(String),

    /// The (damped) Newton iteration failed to converge.
    #[error("solver failed to converge: {0}")]
    NonConvergence(String),

    /// The Hessian stayed indefinite through the entire shift escalation.
    #[error("indefinite system: {0}")]
    Indefinite(String),

    /// A trial deformation left the orientation-preserving class
    /// (det F <= 0 at a quadrature point).
    #[error("non-admissible deformation: {0}")]
    NonAdmissible(String),

    /// Numerical linear algebra failure not covered above.
    #[error("numerical error: {0}")]
    Numeric(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
