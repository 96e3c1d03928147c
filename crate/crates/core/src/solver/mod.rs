//! Frank-Wolfe with away steps.

pub mod objective;
pub mod rate;
pub mod run;
pub mod step;

pub use objective::{builtin_function, eigen_extremes, psd_sqrt, HalfSquaredNorm, Objective, SmoothFunction};
pub use rate::{
    certified_optimum, drop_step_audit, rate_bound_composite, rate_bound_generic, rate_bound_quadratic,
    verify_linear_rate, DropAudit, RateBound, RateCheck, RateRow, RateTheorem,
};
pub use run::{run, IterateRecord, RunConfig, RunTrace, StepRule, StopReason, TIE_BREAK_POLICY};
pub use step::{select_direction, step_composite, step_exact_quadratic, step_lipschitz, Direction, StepKind};
