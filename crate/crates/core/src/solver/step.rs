//! Direction selection and the three steplength rules.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::polytope::{AtomMatrix, SimplexPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Regular,
    Away,
}

impl StepKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StepKind::Regular => "regular",
            StepKind::Away => "away",
        }
    }
}

/// Outcome of the branch in one iteration of the away-step method.
#[derive(Debug, Clone)]
pub struct Direction {
    pub kind: StepKind,
    /// `a_j - u` for a regular step, `u - a_ℓ` for an away step.
    pub v: DVector<f64>,
    pub gamma_max: f64,
    /// `argmin_i <∇f, a_i>`, lowest index on ties.
    pub j: usize,
    /// `argmax_{i ∈ I(x)} <∇f, a_i>`, lowest index on ties.
    pub l: usize,
    /// `<∇f, a_j - u>`.
    pub regular_gap: f64,
    /// `<∇f, u - a_ℓ>`.
    pub away_gap: f64,
}

impl Direction {
    /// The Frank-Wolfe gap `<∇f, u - a_j>`.
    pub fn fw_gap(&self) -> f64 {
        -self.regular_gap
    }
}

pub fn select_direction(a: &AtomMatrix, x: &SimplexPoint, grad: &DVector<f64>) -> Result<Direction> {
    if x.len() != a.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), found: x.len() });
    }
    if grad.len() != a.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: grad.len() });
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NumericalBreakdown("gradient is not finite".into()));
    }
    let scores: Vec<f64> = (0..a.len()).map(|i| grad.dot(&a.matrix().column(i))).collect();
    let mut j = 0;
    for i in 1..scores.len() {
        if scores[i] < scores[j] {
            j = i;
        }
    }
    let support = x.support();
    let mut l = support[0];
    for &i in &support[1..] {
        if scores[i] > scores[l] {
            l = i;
        }
    }
    let u = a.combine(x)?;
    let gu = grad.dot(&u);
    let regular_gap = scores[j] - gu;
    let away_gap = gu - scores[l];
    if regular_gap < away_gap || support.len() == 1 {
        Ok(Direction {
            kind: StepKind::Regular,
            v: a.atom(j) - &u,
            gamma_max: 1.0,
            j,
            l,
            regular_gap,
            away_gap,
        })
    } else {
        let xl = x.weights()[l];
        assert!(xl < 1.0, "away step from a vertex iterate");
        Ok(Direction {
            kind: StepKind::Away,
            v: &u - a.atom(l),
            gamma_max: xl / (1.0 - xl),
            j,
            l,
            regular_gap,
            away_gap,
        })
    }
}

fn clamp(gamma: f64, gamma_max: f64) -> f64 {
    gamma.min(gamma_max).max(0.0)
}

/// `min{-<∇f, v>/(L |v|^2), γ_max}`, clamped below at zero.
pub fn step_lipschitz(grad: &DVector<f64>, v: &DVector<f64>, lipschitz: f64, gamma_max: f64) -> Result<f64> {
    if !(lipschitz > 0.0) {
        return Err(Error::InvalidInput(format!("L must be positive, got {lipschitz}")));
    }
    let vv = v.norm_squared();
    if vv == 0.0 {
        return Err(Error::ZeroDirection);
    }
    Ok(clamp(-grad.dot(v) / (lipschitz * vv), gamma_max))
}

/// Exact line search for `<u, Qu>/2 + <b, u>` along `v` on `[0, γ_max]`.
pub fn step_exact_quadratic(
    q: &DMatrix<f64>,
    b: &DVector<f64>,
    u: &DVector<f64>,
    v: &DVector<f64>,
    gamma_max: f64,
) -> f64 {
    let curvature = v.dot(&(q * v));
    if curvature <= 0.0 {
        return gamma_max;
    }
    let slope = (q * u + b).dot(v);
    clamp(-slope / curvature, gamma_max)
}

/// `min{γ_max, -<∇f, v>/(L |Ev|^2)}` when `Ev ≠ 0`, else `γ_max`.
pub fn step_composite(
    e: &DMatrix<f64>,
    lipschitz: f64,
    grad: &DVector<f64>,
    v: &DVector<f64>,
    gamma_max: f64,
) -> Result<f64> {
    if !(lipschitz > 0.0) {
        return Err(Error::InvalidInput(format!("L must be positive, got {lipschitz}")));
    }
    let ev = (e * v).norm_squared();
    if ev == 0.0 {
        return Ok(gamma_max);
    }
    Ok(clamp(-grad.dot(v) / (lipschitz * ev), gamma_max))
}
