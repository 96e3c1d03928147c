use thiserror::Error;

/// Errors raised by the geometry kernels, condition measures and solver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("trivial polytope: all atoms coincide")]
    TrivialPolytope,

    #[error("instance too large: {n} atoms exceeds the limit of {limit}")]
    InstanceTooLarge { n: usize, limit: usize },

    #[error("point lies outside the convex hull of the atoms")]
    OutsideHull,

    #[error("direction is zero")]
    ZeroDirection,

    #[error("initial point is not a vertex of the simplex")]
    NotAVertex,

    #[error("strong convexity constant {mu} exceeds Lipschitz constant {lipschitz}")]
    MuExceedsLipschitz { mu: f64, lipschitz: f64 },

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
