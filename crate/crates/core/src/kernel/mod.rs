//! Linear programming and polytope-distance kernels.

pub mod lp;
pub mod mnp;

pub use lp::{
    solve_lp, solve_lp_with, Constraint, LinearProgram, LpOptions, LpSolution, LpStatus, Sense,
    VarBound,
};
pub use mnp::{min_norm_point, polytope_distance, MinNormPoint, PolytopeDistance};
