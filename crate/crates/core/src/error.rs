use num::complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{0} requires floating-point evaluation; the exact backend is limited to the linear regime")]
    InexactBackend(String),

    #[error("potential is singular at x = {x}")]
    SingularPoint { x: Complex64 },

    #[error("boundary constraint violated: {0}")]
    ConstraintViolation(String),

    #[error("{function} is not positive at x = {points:?}")]
    Positivity {
        function: &'static str,
        points: Vec<i64>,
    },

    #[error("degree-L part of the potential vanishes (sum of v_(k,l)^2 with k+l=L is zero)")]
    DegreeConstraint,

    #[error("least-squares system is rank deficient (rank {rank} < {unknowns} unknowns)")]
    Underdetermined { rank: usize, unknowns: usize },

    #[error("samples are not representable by a degree-{degree} potential (relative residual {residual:e})")]
    NotRepresentable { degree: usize, residual: f64 },

    #[error("degree L = {degree} is not exactly solvable (L = 2 required)")]
    NotExactlySolvable { degree: usize },

    #[error("eigenvalues E({i}) and E({n}) coincide")]
    Degenerate { i: usize, n: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("singular bracket: {0}")]
    SingularBracket(String),

    #[error("inconsistent constraint: {0}")]
    InconsistentConstraint(String),

    #[error("invariant subspace broken in column {column}: residual {residual:e}")]
    QesBroken { column: usize, residual: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}
