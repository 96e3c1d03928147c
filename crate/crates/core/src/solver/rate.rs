//! Linear-rate constants, rate verification and the drop-step audit.

use serde::Serialize;

use super::objective::Objective;
use super::run::{run, RunConfig, RunTrace};
use super::step::StepKind;
use crate::error::{Error, Result};
use crate::polytope::{AtomMatrix, SimplexPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RateTheorem {
    Thm4,
    Thm5,
    Thm6,
}

impl std::fmt::Display for RateTheorem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RateTheorem::Thm4 => "thm4",
            RateTheorem::Thm5 => "thm5",
            RateTheorem::Thm6 => "thm6",
        })
    }
}

impl std::str::FromStr for RateTheorem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "thm4" => Ok(RateTheorem::Thm4),
            "thm5" => Ok(RateTheorem::Thm5),
            "thm6" => Ok(RateTheorem::Thm6),
            other => Err(Error::InvalidInput(format!("unknown rate theorem {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RateBound {
    /// Clamped rate in `(0, 1/2]`.
    pub r: f64,
    /// Rate before the clamp at `1/2`.
    pub raw: f64,
    pub theorem: RateTheorem,
    pub mu: Option<f64>,
    pub lipschitz: Option<f64>,
    pub c: Option<f64>,
    pub bar_phi: Option<f64>,
    pub diam: f64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

fn clamped(raw: f64) -> Result<f64> {
    let r = raw.min(0.5);
    if !(r > 0.0) {
        return Err(Error::NumericalBreakdown(format!("rate underflows to {r}")));
    }
    Ok(r)
}

/// `r = min{μ c^2/(L diam^2), 1/2}`.
pub fn rate_bound_generic(mu: f64, lipschitz: f64, c: f64, diam: f64) -> Result<RateBound> {
    positive("mu", mu)?;
    positive("L", lipschitz)?;
    positive("c", c)?;
    positive("diam", diam)?;
    if mu > lipschitz {
        return Err(Error::MuExceedsLipschitz { mu, lipschitz });
    }
    let raw = mu * c * c / (lipschitz * diam * diam);
    Ok(RateBound {
        r: clamped(raw)?,
        raw,
        theorem: RateTheorem::Thm4,
        mu: Some(mu),
        lipschitz: Some(lipschitz),
        c: Some(c),
        bar_phi: None,
        diam,
    })
}

/// `r = min{Φ̄_g^2/(8 diam(Q^{1/2}A)^2), 1/2}`.
pub fn rate_bound_quadratic(bar_phi: f64, diam_scaled: f64) -> Result<RateBound> {
    positive("bar_phi", bar_phi)?;
    positive("diam", diam_scaled)?;
    let raw = bar_phi * bar_phi / (8.0 * diam_scaled * diam_scaled);
    Ok(RateBound {
        r: clamped(raw)?,
        raw,
        theorem: RateTheorem::Thm5,
        mu: None,
        lipschitz: None,
        c: None,
        bar_phi: Some(bar_phi),
        diam: diam_scaled,
    })
}

/// `r = min{(μ/L) Φ̄_g^2/(8 diam(EA)^2), 1/2}`.
pub fn rate_bound_composite(mu: f64, lipschitz: f64, bar_phi: f64, diam_ea: f64) -> Result<RateBound> {
    positive("mu", mu)?;
    positive("L", lipschitz)?;
    positive("bar_phi", bar_phi)?;
    positive("diam", diam_ea)?;
    if mu > lipschitz {
        return Err(Error::MuExceedsLipschitz { mu, lipschitz });
    }
    let raw = (mu / lipschitz) * bar_phi * bar_phi / (8.0 * diam_ea * diam_ea);
    Ok(RateBound {
        r: clamped(raw)?,
        raw,
        theorem: RateTheorem::Thm6,
        mu: Some(mu),
        lipschitz: Some(lipschitz),
        c: None,
        bar_phi: Some(bar_phi),
        diam: diam_ea,
    })
}

/// Slack allowed on `f* <= min_k f_k`.
pub const F_STAR_TOL: f64 = 1e-9;
/// Rounding slack in the rate inequality, relative to `max(1, f_0 - f*)`.
pub const RATE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct RateRow {
    pub k: usize,
    pub excess: f64,
    pub bound: f64,
    /// `bound - excess`; negative beyond the slack means a violation.
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateCheck {
    pub passed: bool,
    pub r: f64,
    pub f_star: f64,
    pub first_violation: Option<usize>,
    pub worst_margin: f64,
    pub rows: Vec<RateRow>,
}

/// Checks `f_k - f* <= (1 - r)^{k/2} (f_0 - f*)` for every record.
pub fn verify_linear_rate(trace: &RunTrace, r: f64, f_star: f64) -> Result<RateCheck> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::InvalidInput(format!("rate must lie in (0, 1], got {r}")));
    }
    let f_min = trace.records.iter().map(|rec| rec.f_value).fold(f64::INFINITY, f64::min);
    if !(f_star <= f_min + F_STAR_TOL) {
        return Err(Error::InvalidInput(format!("f* = {f_star} exceeds the smallest trace value {f_min}")));
    }
    let f0 = trace.records[0].f_value - f_star;
    let slack = RATE_SLACK * f0.max(1.0);
    let mut rows = Vec::with_capacity(trace.len());
    let mut first_violation = None;
    let mut worst_margin = f64::INFINITY;
    for rec in &trace.records {
        let excess = rec.f_value - f_star;
        let bound = (1.0 - r).powf(rec.k as f64 / 2.0) * f0;
        let margin = bound - excess;
        if margin < -slack && first_violation.is_none() {
            first_violation = Some(rec.k);
        }
        worst_margin = worst_margin.min(margin);
        rows.push(RateRow { k: rec.k, excess, bound, margin });
    }
    Ok(RateCheck { passed: first_violation.is_none(), r, f_star, first_violation, worst_margin, rows })
}

/// Presolve to a tiny FW gap; returns `f_final - gap`, a certified lower
/// bound on `f*` by convexity, together with the final simplex point.
pub fn certified_optimum(
    a: &AtomMatrix,
    objective: &Objective,
    x0: &SimplexPoint,
    gap_tol: f64,
    max_iter: usize,
) -> Result<(f64, SimplexPoint)> {
    let cfg = RunConfig { gap_tol, max_iter, step_rule: None };
    let trace = run(a, objective, x0, &cfg)?;
    let last = trace.last();
    let x = SimplexPoint::from_approximate(last.x.clone())?;
    Ok((last.f_value - last.fw_gap.max(0.0), x))
}

#[derive(Debug, Clone, Serialize)]
pub struct DropAudit {
    pub passed: bool,
    pub iterations: usize,
    pub drop_steps: usize,
    /// Largest `drops(N) - N/2` over prefixes; at most zero when the audit passes.
    pub worst_prefix_excess: f64,
    pub violations: Vec<String>,
}

/// Drop-step accounting: support grows by at most one on partial steps,
/// does not grow on full steps with `γ_max >= 1`, shrinks on drop steps,
/// and drop steps never exceed half the iterations.
pub fn drop_step_audit(trace: &RunTrace) -> DropAudit {
    let mut violations = Vec::new();
    if let Some(first) = trace.records.first() {
        if first.support_size != 1 {
            violations.push(format!("initial support has size {}", first.support_size));
        }
    }
    let mut drops = 0usize;
    let mut iterations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for pair in trace.records.windows(2) {
        let (cur, next) = (&pair[0], &pair[1]);
        let Some(kind) = cur.step_kind else { continue };
        iterations += 1;
        let change = next.support_size as i64 - cur.support_size as i64;
        let full = cur.gamma == cur.gamma_max;
        let is_drop = kind == StepKind::Away && full && cur.gamma_max < 1.0;
        if is_drop {
            drops += 1;
            if change > -1 {
                violations.push(format!("k={}: drop step changed support by {change}", cur.k));
            }
        } else if full && cur.gamma_max >= 1.0 {
            if change > 0 {
                violations.push(format!("k={}: full step grew support by {change}", cur.k));
            }
        } else if change > 1 {
            violations.push(format!("k={}: partial step grew support by {change}", cur.k));
        }
        let excess = drops as f64 - iterations as f64 / 2.0;
        worst = worst.max(excess);
        if excess > 0.0 {
            violations.push(format!("after {iterations} iterations: {drops} drop steps"));
        }
    }
    DropAudit {
        passed: violations.is_empty(),
        iterations,
        drop_steps: drops,
        worst_prefix_excess: if iterations == 0 { 0.0 } else { worst },
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::run::{IterateRecord, StepRule, StopReason};
    use approx::assert_abs_diff_eq;
    use nalgebra::{DMatrix, DVector};
    use std::f64::consts::PI;

    fn record(k: usize, f: f64, kind: Option<StepKind>, gamma: f64, gamma_max: f64, support: usize) -> IterateRecord {
        IterateRecord {
            k,
            x: vec![],
            u: vec![],
            f_value: f,
            step_kind: kind,
            gamma,
            gamma_max,
            regular_gap: 0.0,
            away_gap: 0.0,
            fw_gap: 0.0,
            j: 0,
            l: 0,
            support_size: support,
        }
    }

    fn trace(records: Vec<IterateRecord>) -> RunTrace {
        RunTrace { records, stop: StopReason::GapTolerance, step_rule: StepRule::ExactQuadratic }
    }

    #[test]
    fn generic_rate_examples() {
        let phi: f64 = 0.3;
        let b = rate_bound_generic(1.0, 1.0, phi / 2.0, 2.0).unwrap();
        assert_abs_diff_eq!(b.r, phi * phi / 16.0, epsilon = 1e-15);
        assert_eq!(rate_bound_generic(1.0, 1.0, 1e6, 1.0).unwrap().r, 0.5);
        let theta = PI / 100.0;
        let b = rate_bound_generic(1.0, 1.0, theta.sin() / 2.0, 2.0).unwrap();
        assert_abs_diff_eq!(b.r, theta.sin().powi(2) / 16.0, epsilon = 1e-15);
        assert!(rate_bound_generic(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(matches!(rate_bound_generic(2.0, 1.0, 1.0, 1.0), Err(Error::MuExceedsLipschitz { .. })));
    }

    #[test]
    fn quadratic_rate_examples() {
        let b = rate_bound_quadratic(2.0, 1.0).unwrap();
        assert_abs_diff_eq!(b.raw, 0.5);
        assert_eq!(b.r, 0.5);
        let b = rate_bound_quadratic(8f64.sqrt(), 1.0).unwrap();
        assert_abs_diff_eq!(b.raw, 1.0, epsilon = 1e-15);
        assert_eq!(b.r, 0.5);
        let t: f64 = 200.0;
        let b = rate_bound_quadratic((t - 1.0 / 16.0).sqrt(), 2.0 * t).unwrap();
        assert_abs_diff_eq!(b.r, (t - 1.0 / 16.0) / (32.0 * t * t), epsilon = 1e-15);
        assert!(rate_bound_quadratic(-1.0, 1.0).is_err());
    }

    #[test]
    fn composite_rate_examples() {
        let a = rate_bound_composite(1.0, 1.0, 0.7, 1.3).unwrap();
        let b = rate_bound_quadratic(0.7, 1.3).unwrap();
        assert_abs_diff_eq!(a.r, b.r);
        let c = rate_bound_composite(2.0, 2.0, 2.0, 1.0).unwrap();
        assert_abs_diff_eq!(c.raw, 0.5);
        assert_eq!(c.r, 0.5);
    }

    #[test]
    fn verify_examples() {
        let single = trace(vec![record(0, 3.0, None, 0.0, 1.0, 1)]);
        assert!(verify_linear_rate(&single, 0.5, 0.0).unwrap().passed);
        let t = trace(vec![
            record(0, 1.0, Some(StepKind::Regular), 0.5, 1.0, 1),
            record(1, 0.9, Some(StepKind::Regular), 0.5, 1.0, 2),
            record(2, 0.85, None, 0.0, 1.0, 2),
        ]);
        assert!(verify_linear_rate(&t, 1e-6, 0.0).unwrap().passed);
        let check = verify_linear_rate(&t, 0.5, 0.0).unwrap();
        assert!(!check.passed);
        assert_eq!(check.first_violation, Some(1));
        assert!(verify_linear_rate(&t, 0.1, 1.0).is_err());
    }

    #[test]
    fn audit_examples() {
        let regular = trace(vec![
            record(0, 1.0, Some(StepKind::Regular), 0.5, 1.0, 1),
            record(1, 0.5, Some(StepKind::Regular), 0.2, 1.0, 2),
            record(2, 0.4, None, 0.0, 1.0, 3),
        ]);
        let audit = drop_step_audit(&regular);
        assert!(audit.passed);
        assert_eq!(audit.drop_steps, 0);

        let bad = trace(vec![
            record(0, 1.0, Some(StepKind::Away), 0.5, 0.5, 2),
            record(1, 0.5, None, 0.0, 1.0, 1),
        ]);
        let audit = drop_step_audit(&bad);
        assert!(!audit.passed);
        assert_eq!(audit.drop_steps, 1);
    }

    #[test]
    fn presolve_gives_lower_bound() {
        let a = AtomMatrix::from_rows(&[vec![1.0, 2.0, 1.5], vec![1.0, 0.5, 2.0]]).unwrap();
        let obj = Objective::quadratic(DMatrix::identity(2, 2), DVector::zeros(2)).unwrap();
        let (f_star, x) = certified_optimum(&a, &obj, &SimplexPoint::vertex(3, 0).unwrap(), 1e-14, 100_000).unwrap();
        // Nearest point of the triangle to the origin lies on the edge (1,1)-(2,0.5).
        let exact = {
            let p: DVector<f64> = DVector::from_vec(vec![1.0, 1.0]);
            let q: DVector<f64> = DVector::from_vec(vec![2.0, 0.5]);
            let d = &q - &p;
            let s = (-p.dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
            0.5 * (p + d * s).norm_squared()
        };
        assert!(f_star <= exact + 1e-15);
        assert!(exact - f_star < 1e-12);
        assert!(x.weights()[2] < 1e-12);
    }
}
