//! Polytope condition measures and the Frank-Wolfe algorithm with away steps.
//!
//! The crate is organised bottom-up:
//!
//! * [`polytope`]: atoms, simplex points, faces and their enumeration.
//! * [`kernel`]: a dense simplex LP solver and Wolfe's minimum-norm-point
//!   algorithm, used for every distance and width computation.
//! * [`measures`]: facial distance, its pairwise and localized variants,
//!   pyramidal directional width and the scaled measures for quadratic and
//!   composite objectives.
//! * [`solver`]: Frank-Wolfe with away steps, step-size rules, rate bounds
//!   and trace audits.
//! * [`experiments`]: reference instances with closed-form values, figure
//!   reproduction, plotting and the self-test suites.

pub mod error;
pub mod experiments;
pub mod io;
pub mod kernel;
pub mod measures;
pub mod polytope;
pub mod solver;

pub use error::{Error, Result};
