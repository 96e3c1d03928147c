//! The Frank-Wolfe iteration with away steps and its trace.

use log::debug;
use nalgebra::DVector;
use serde::Serialize;

use super::objective::Objective;
use super::step::{select_direction, step_composite, step_exact_quadratic, step_lipschitz, StepKind};
use crate::error::{Error, Result};
use crate::polytope::{AtomMatrix, SimplexPoint};

/// Version tag for the branch and tie-breaking rules recorded in manifests.
pub const TIE_BREAK_POLICY: &str = "lowest-index/v1: argmin and argmax ties go to the lowest atom index; \
regular-vs-away ties take the away branch";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum StepRule {
    /// `γ = min{-<∇f,v>/(L|v|^2), γ_max}`.
    Lipschitz { lipschitz: f64 },
    /// Exact line search; quadratic objectives only.
    ExactQuadratic,
    /// `γ = min{γ_max, -<∇f,v>/(L|Ev|^2)}`; composite objectives only.
    Composite,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub gap_tol: f64,
    pub max_iter: usize,
    /// `None` picks the natural rule for the objective.
    pub step_rule: Option<StepRule>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { gap_tol: 1e-12, max_iter: 10_000, step_rule: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    GapTolerance,
    MaxIterations,
}

/// State at iteration `k` and the step taken from it. The last record of a
/// trace has `step_kind = None`.
#[derive(Debug, Clone, Serialize)]
pub struct IterateRecord {
    pub k: usize,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub f_value: f64,
    pub step_kind: Option<StepKind>,
    pub gamma: f64,
    pub gamma_max: f64,
    /// `<∇f, a_j - u>`.
    pub regular_gap: f64,
    /// `<∇f, u - a_ℓ>`.
    pub away_gap: f64,
    pub fw_gap: f64,
    pub j: usize,
    pub l: usize,
    pub support_size: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunTrace {
    pub records: Vec<IterateRecord>,
    pub stop: StopReason,
    pub step_rule: StepRule,
}

impl RunTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> &IterateRecord {
        self.records.last().expect("trace is never empty")
    }

    pub fn f_values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.f_value).collect()
    }

    /// `1 - f_{k+1}/f_k` for consecutive records, measured against `f_star`.
    pub fn ratios(&self, f_star: f64) -> Vec<f64> {
        self.records
            .windows(2)
            .map(|w| 1.0 - (w[1].f_value - f_star) / (w[0].f_value - f_star))
            .collect()
    }
}

fn resolve_rule(objective: &Objective, rule: Option<StepRule>) -> Result<StepRule> {
    match (rule, objective) {
        (None, Objective::Quadratic { .. }) => Ok(StepRule::ExactQuadratic),
        (None, Objective::Composite { .. }) => Ok(StepRule::Composite),
        (None, Objective::GenericSmooth { lipschitz, .. }) => Ok(StepRule::Lipschitz { lipschitz: *lipschitz }),
        (Some(StepRule::ExactQuadratic), Objective::Quadratic { .. }) => Ok(StepRule::ExactQuadratic),
        (Some(StepRule::ExactQuadratic), _) => {
            Err(Error::InvalidInput("exact line search needs a quadratic objective".into()))
        }
        (Some(StepRule::Composite), Objective::Composite { .. }) => Ok(StepRule::Composite),
        (Some(StepRule::Composite), _) => Err(Error::InvalidInput("composite rule needs a composite objective".into())),
        (Some(StepRule::Lipschitz { lipschitz }), _) => {
            if !(lipschitz > 0.0 && lipschitz.is_finite()) {
                return Err(Error::InvalidInput(format!("L must be positive, got {lipschitz}")));
            }
            Ok(StepRule::Lipschitz { lipschitz })
        }
    }
}

fn steplength(
    rule: StepRule,
    objective: &Objective,
    grad: &DVector<f64>,
    u: &DVector<f64>,
    v: &DVector<f64>,
    gamma_max: f64,
) -> Result<f64> {
    match (rule, objective) {
        (StepRule::Lipschitz { lipschitz }, _) => step_lipschitz(grad, v, lipschitz, gamma_max),
        (StepRule::ExactQuadratic, Objective::Quadratic { q, b }) => Ok(step_exact_quadratic(q, b, u, v, gamma_max)),
        (StepRule::Composite, Objective::Composite { e, lipschitz, .. }) => {
            step_composite(e, *lipschitz, grad, v, gamma_max)
        }
        _ => unreachable!("rule checked against objective"),
    }
}

/// Runs the method from the vertex `x0` until the FW gap drops to
/// `gap_tol` or `max_iter` steps have been taken.
pub fn run(a: &AtomMatrix, objective: &Objective, x0: &SimplexPoint, config: &RunConfig) -> Result<RunTrace> {
    if objective.dim() != a.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: objective.dim() });
    }
    if x0.len() != a.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), found: x0.len() });
    }
    if x0.as_vertex().is_none() {
        return Err(Error::NotAVertex);
    }
    if !(config.gap_tol >= 0.0) {
        return Err(Error::InvalidInput("gap tolerance must be nonnegative".into()));
    }
    let rule = resolve_rule(objective, config.step_rule)?;

    let mut x = x0.clone();
    let mut records = Vec::new();
    let mut k = 0;
    let stop = loop {
        let u = a.combine(&x)?;
        let grad = objective.gradient(&u);
        let f_value = objective.value(&u);
        let dir = select_direction(a, &x, &grad)?;
        let mut record = IterateRecord {
            k,
            x: x.weights().to_vec(),
            u: u.iter().copied().collect(),
            f_value,
            step_kind: None,
            gamma: 0.0,
            gamma_max: dir.gamma_max,
            regular_gap: dir.regular_gap,
            away_gap: dir.away_gap,
            fw_gap: dir.fw_gap(),
            j: dir.j,
            l: dir.l,
            support_size: x.support().len(),
        };
        if dir.fw_gap() <= config.gap_tol {
            records.push(record);
            break StopReason::GapTolerance;
        }
        if k >= config.max_iter {
            records.push(record);
            break StopReason::MaxIterations;
        }
        let gamma = steplength(rule, objective, &grad, &u, &dir.v, dir.gamma_max)?;
        let mut w = x.weights().to_vec();
        match dir.kind {
            StepKind::Regular => {
                w.iter_mut().for_each(|wi| *wi *= 1.0 - gamma);
                w[dir.j] += gamma;
            }
            StepKind::Away => {
                w.iter_mut().for_each(|wi| *wi *= 1.0 + gamma);
                w[dir.l] -= gamma;
                if gamma == dir.gamma_max {
                    w[dir.l] = 0.0;
                }
            }
        }
        x = SimplexPoint::from_approximate(w)?;
        record.step_kind = Some(dir.kind);
        record.gamma = gamma;
        debug!(
            "k={k} f={f_value:.6e} {} gamma={gamma:.3e}/{:.3e} |I|={}",
            dir.kind.as_str(),
            dir.gamma_max,
            record.support_size
        );
        records.push(record);
        k += 1;
    };
    Ok(RunTrace { records, stop, step_rule: rule })
}
