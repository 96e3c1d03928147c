//! Rate constants for a concrete instance, with `f*` and `Z*` from a presolve.

use nalgebra::DVector;
use serde::Serialize;

use super::reproduce::{PRESOLVE_GAP_TOL, PRESOLVE_MAX_ITER};
use crate::error::{Error, Result};
use crate::measures::{bar_phi_bounds, local_phi_lower_bound, scaled_instance, BarPhiBounds};
use crate::polytope::{AtomMatrix, SimplexPoint};
use crate::solver::{
    certified_optimum, eigen_extremes, psd_sqrt, rate_bound_composite, rate_bound_generic, rate_bound_quadratic,
    Objective, RateBound, RateTheorem,
};

/// Samples and seed for the Φ̄_g bracket.
pub const BAR_PHI_SAMPLES: usize = 200;
pub const BAR_PHI_SEED: u64 = 0;

#[derive(Debug, Clone, Serialize)]
pub struct TheoremRate {
    pub bound: RateBound,
    /// Certified lower bound on `f*`.
    pub f_star: f64,
    pub x_star: Vec<f64>,
    pub g: Option<Vec<f64>>,
    pub bar_phi: Option<BarPhiBounds>,
    pub seed: Option<u64>,
}

/// Rate `r` of the chosen theorem. Measures that are only bracketed enter
/// through their certified lower bounds, so the returned `r` is
/// conservative.
pub fn theorem_rate(theorem: RateTheorem, a: &AtomMatrix, obj: &Objective, x0: &SimplexPoint) -> Result<TheoremRate> {
    let (f_star, x_star) = certified_optimum(a, obj, x0, PRESOLVE_GAP_TOL, PRESOLVE_MAX_ITER)?;
    let u_star = a.combine(&x_star)?;
    let b_row = |b: &DVector<f64>| -> Vec<f64> { (a.matrix().transpose() * b).iter().copied().collect() };
    let (bound, g, bar_phi) = match (theorem, obj) {
        (RateTheorem::Thm4, _) => {
            let mu = match obj {
                Objective::Quadratic { q, .. } => eigen_extremes(q)?.0,
                Objective::GenericSmooth { mu: Some(mu), .. } => *mu,
                _ => return Err(Error::InvalidInput("thm4 needs a strongly convex objective".into())),
            };
            if !(mu > 0.0) {
                return Err(Error::InvalidInput("thm4 needs μ > 0; Q is singular".into()));
            }
            let c = local_phi_lower_bound(a, std::slice::from_ref(&x_star))? / 2.0;
            (rate_bound_generic(mu, obj.gradient_lipschitz()?, c, a.diameter())?, None, None)
        }
        (RateTheorem::Thm5, Objective::Quadratic { q, b }) => {
            let root = psd_sqrt(q)?;
            let top = a.transform(&root)?;
            let abar = top.with_row(&b_row(b))?;
            let g = &root * &u_star;
            let bounds = bar_phi_bounds(&scaled_instance(&abar, &g)?, BAR_PHI_SAMPLES, BAR_PHI_SEED)?;
            (rate_bound_quadratic(bounds.lower, top.diameter())?, Some(g), Some(bounds))
        }
        (RateTheorem::Thm6, Objective::Composite { e, b, h, mu, lipschitz }) => {
            let top = a.transform(e)?;
            let abar = top.with_row(&b_row(b))?;
            let g = h.gradient(&(e * &u_star)) / *mu;
            let bounds = bar_phi_bounds(&scaled_instance(&abar, &g)?, BAR_PHI_SAMPLES, BAR_PHI_SEED)?;
            (rate_bound_composite(*mu, *lipschitz, bounds.lower, top.diameter())?, Some(g), Some(bounds))
        }
        (RateTheorem::Thm5, _) => return Err(Error::InvalidInput("thm5 needs a quadratic objective".into())),
        (RateTheorem::Thm6, _) => return Err(Error::InvalidInput("thm6 needs a composite objective".into())),
    };
    Ok(TheoremRate {
        seed: bar_phi.as_ref().map(|_| BAR_PHI_SEED),
        bound,
        f_star,
        x_star: x_star.weights().to_vec(),
        g: g.map(|g| g.iter().copied().collect()),
        bar_phi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::instances::{example_four, example_one};
    use crate::solver::{run, verify_linear_rate, RunConfig};

    #[test]
    fn thm5_on_fourth_example_clamps() {
        let (a, obj) = example_four(3.0).unwrap();
        let x0 = SimplexPoint::vertex(2, 1).unwrap();
        let tr = theorem_rate(RateTheorem::Thm5, &a, &obj, &x0).unwrap();
        assert_eq!(tr.bound.r, 0.5);
        assert!(tr.f_star.abs() < 1e-12);
    }

    #[test]
    fn thm4_rate_holds_on_first_example() {
        let (a, obj) = example_one(std::f64::consts::PI / 10.0).unwrap();
        let x0 = SimplexPoint::vertex(3, 0).unwrap();
        let tr = theorem_rate(RateTheorem::Thm4, &a, &obj, &x0).unwrap();
        let trace = run(&a, &obj, &x0, &RunConfig::default()).unwrap();
        assert!(verify_linear_rate(&trace, tr.bound.r, tr.f_star).unwrap().passed);
    }

    #[test]
    fn theorem_must_match_objective() {
        let (a, obj) = example_one(0.3).unwrap();
        let x0 = SimplexPoint::vertex(3, 0).unwrap();
        assert!(theorem_rate(RateTheorem::Thm6, &a, &obj, &x0).is_err());
    }
}
