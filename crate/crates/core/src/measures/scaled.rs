//! Scaled measures for quadratic and composite objectives: `Z(g)`, `δ(g)`,
//! `|·|_g` and Φ̄_g.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::phi::{local_phi_lower_bound, longest_segment, longest_segment_dual, ZERO_DIRECTION_TOL};
use super::PhiReport;
use crate::error::{Error, Result};
use crate::polytope::{AtomMatrix, SimplexPoint, WitnessPair};

/// Tolerance on `<(g,1), ā>` for membership in `Z(g)`, relative to the
/// largest functional magnitude (at least 1).
pub const ZG_TOL: f64 = 1e-9;

/// `Ā ∈ R^{(m+1)×n}` with the anchor data for a fixed `g ∈ R^m`.
#[derive(Debug, Clone)]
pub struct ScaledInstance {
    pub abar: AtomMatrix,
    pub g: DVector<f64>,
    /// Atoms attaining `min_j <(g,1), ā_j>`.
    pub zg_face: Vec<usize>,
    pub delta_g: f64,
    /// `<(g,1), ā_j>` per atom.
    pub functional: Vec<f64>,
}

fn functional_values(abar: &AtomMatrix, g: &DVector<f64>) -> Vec<f64> {
    let m = g.len();
    (0..abar.len())
        .map(|j| {
            let col = abar.matrix().column(j);
            g.iter().zip(col.iter()).map(|(a, b)| a * b).sum::<f64>() + col[m]
        })
        .collect()
}

pub fn scaled_instance(abar: &AtomMatrix, g: &DVector<f64>) -> Result<ScaledInstance> {
    if abar.dim() != g.len() + 1 {
        return Err(Error::DimensionMismatch { expected: g.len() + 1, found: abar.dim() });
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("g has non-finite entries".into()));
    }
    let functional = functional_values(abar, g);
    let lo = functional.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = functional.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = ZG_TOL * functional.iter().fold(1.0_f64, |s, v| s.max(v.abs()));
    let zg_face = (0..functional.len()).filter(|&j| functional[j] - lo <= tol).collect();
    let spread = hi - lo;
    let delta_g = if spread <= tol { 0.0 } else { spread };
    Ok(ScaledInstance { abar: abar.clone(), g: g.clone(), zg_face, delta_g, functional })
}

/// `|v̄|_g = sqrt(|v|^2 + |<g, v> + v_{m+1}|)`.
pub fn norm_g(vbar: &DVector<f64>, g: &DVector<f64>) -> Result<f64> {
    let m = g.len();
    if vbar.len() != m + 1 {
        return Err(Error::DimensionMismatch { expected: m + 1, found: vbar.len() });
    }
    let v = vbar.rows(0, m);
    let last = g.dot(&v) + vbar[m];
    Ok((v.norm_squared() + last.abs()).sqrt())
}

impl ScaledInstance {
    pub fn m(&self) -> usize {
        self.g.len()
    }

    /// `A = [I_m 0] Ā`.
    pub fn top(&self) -> Result<AtomMatrix> {
        self.abar.top_rows(self.m())
    }

    /// `Â`: the last row of `Ā` replaced by `(g^T Ā_top + ā_last)/sqrt(δ(g))`,
    /// or `None` when `δ(g) = 0`.
    pub fn hat(&self) -> Result<Option<AtomMatrix>> {
        if self.delta_g == 0.0 {
            return Ok(None);
        }
        let s = self.delta_g.sqrt();
        let row: Vec<f64> = self.functional.iter().map(|f| f / s).collect();
        Ok(Some(self.top()?.with_row(&row)?))
    }

    pub fn in_zg(&self, z: &SimplexPoint) -> Result<bool> {
        if z.len() != self.abar.len() {
            return Err(Error::DimensionMismatch { expected: self.abar.len(), found: z.len() });
        }
        let lo = self.functional.iter().copied().fold(f64::INFINITY, f64::min);
        let value: f64 = z.weights().iter().zip(&self.functional).map(|(w, f)| w * f).sum();
        let tol = ZG_TOL * self.functional.iter().fold(1.0_f64, |s, v| s.max(v.abs()));
        Ok(value - lo <= tol)
    }

    /// Projects `z` onto the sub-simplex spanned by `Z(g)` after checking
    /// membership within [`ZG_TOL`].
    pub fn project_to_zg(&self, z: &SimplexPoint) -> Result<SimplexPoint> {
        if !self.in_zg(z)? {
            return Err(Error::InvalidInput("z is not in Z(g)".into()));
        }
        let mut w = vec![0.0; z.len()];
        for &j in &self.zg_face {
            w[j] = z.weights()[j];
        }
        SimplexPoint::from_approximate(w)
    }

    /// The sub-simplex `Z(g)` as the uniform point on its atoms.
    pub fn zg_center(&self) -> Result<SimplexPoint> {
        SimplexPoint::uniform_on(self.abar.len(), &self.zg_face)
    }

    fn scaled_direction(&self, x: &SimplexPoint, z: &SimplexPoint) -> Result<DVector<f64>> {
        if x.len() != self.abar.len() {
            return Err(Error::DimensionMismatch { expected: self.abar.len(), found: x.len() });
        }
        let z = self.project_to_zg(z)?;
        let diff = self.abar.combine(x)? - self.abar.combine(&z)?;
        if diff.norm() <= ZERO_DIRECTION_TOL {
            return Err(Error::ZeroDirection);
        }
        let scale = norm_g(&diff, &self.g)?;
        Ok(diff / scale)
    }
}

/// Φ̄_g(Ā,x,z) with witnesses `ū = Āw`, `v̄ = Āy`, `ū - v̄ = Φ̄ d̄`.
pub fn bar_phi_pair(inst: &ScaledInstance, x: &SimplexPoint, z: &SimplexPoint) -> Result<PhiReport> {
    let d = inst.scaled_direction(x, z)?;
    let seg = longest_segment(inst.abar.matrix(), x.support(), &d)?;
    let u = inst.abar.combine(&seg.w)?;
    let v = inst.abar.combine(&seg.y)?;
    Ok(PhiReport {
        value: seg.lambda,
        minimizing_face: None,
        witness: WitnessPair { u, v, w: seg.w, y: seg.y },
        optimal_p: Some(seg.p),
    })
}

/// Φ̄_g(Ā,x,z) from the λ-maximisation identity alone.
pub fn bar_phi_pair_dual(inst: &ScaledInstance, x: &SimplexPoint, z: &SimplexPoint) -> Result<f64> {
    let d = inst.scaled_direction(x, z)?;
    longest_segment_dual(inst.abar.matrix(), x.support(), &d)
}

/// Bracket `lower <= Φ̄_g(Ā) <= upper`.
#[derive(Debug, Clone, Serialize)]
pub struct BarPhiBounds {
    pub lower: f64,
    pub upper: f64,
    /// Candidate pair attaining `upper`.
    pub argmin_x: Vec<f64>,
    pub argmin_z: Vec<f64>,
    pub candidates: usize,
}

const EDGE_GRID: usize = 32;
const GOLDEN_ITERS: usize = 60;

struct Search<'a> {
    inst: &'a ScaledInstance,
    best: f64,
    best_x: Vec<f64>,
    best_z: Vec<f64>,
    evaluated: usize,
}

impl Search<'_> {
    fn eval(&mut self, x: &[f64], z: &SimplexPoint) -> Option<f64> {
        let x = SimplexPoint::from_approximate(x.to_vec()).ok()?;
        let value = match bar_phi_pair(self.inst, &x, z) {
            Ok(r) => r.value,
            Err(_) => return None,
        };
        self.evaluated += 1;
        if value < self.best {
            self.best = value;
            self.best_x = x.weights().to_vec();
            self.best_z = z.weights().to_vec();
        }
        Some(value)
    }

    /// Grid plus golden-section refinement along `x = (1-s) e_i + s e_j`.
    fn edge(&mut self, i: usize, j: usize, z: &SimplexPoint) {
        let n = self.inst.abar.len();
        let point = |s: f64| {
            let mut x = vec![0.0; n];
            x[i] += 1.0 - s;
            x[j] += s;
            x
        };
        let mut grid = Vec::with_capacity(EDGE_GRID + 1);
        for k in 0..=EDGE_GRID {
            let s = k as f64 / EDGE_GRID as f64;
            grid.push(self.eval(&point(s), z).unwrap_or(f64::INFINITY));
        }
        let k = (0..grid.len()).min_by(|a, b| grid[*a].total_cmp(&grid[*b])).unwrap_or(0);
        if !grid[k].is_finite() {
            return;
        }
        let h = 1.0 / EDGE_GRID as f64;
        let (mut lo, mut hi) = (((k as f64) - 1.0) * h, ((k as f64) + 1.0) * h);
        lo = lo.max(0.0);
        hi = hi.min(1.0);
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = hi - ratio * (hi - lo);
        let mut d = lo + ratio * (hi - lo);
        let mut fc = self.eval(&point(c), z).unwrap_or(f64::INFINITY);
        let mut fd = self.eval(&point(d), z).unwrap_or(f64::INFINITY);
        for _ in 0..GOLDEN_ITERS {
            if fc < fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - ratio * (hi - lo);
                fc = self.eval(&point(c), z).unwrap_or(f64::INFINITY);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + ratio * (hi - lo);
                fd = self.eval(&point(d), z).unwrap_or(f64::INFINITY);
            }
        }
    }
}

fn random_simplex(rng: &mut ChaCha8Rng, n: usize, indices: &[usize]) -> Vec<f64> {
    let mut w = vec![0.0; n];
    let mut total = 0.0;
    for &i in indices {
        let e: f64 = -rng.gen_range(f64::MIN_POSITIVE..1.0f64).ln();
        w[i] = e;
        total += e;
    }
    w.iter_mut().for_each(|v| *v /= total);
    w
}

/// Lower bound from Φ(Â, Z(g)) (or Φ(A, Z(g)) when `δ(g) = 0`) through the
/// localized face bound, and upper bound from minimising Φ̄_g(Ā,x,z) over
/// vertex pairs, edge searches with `z` at a vertex of `Z(g)`, and
/// `samples` random pairs drawn with the given seed.
pub fn bar_phi_bounds(inst: &ScaledInstance, samples: usize, seed: u64) -> Result<BarPhiBounds> {
    if !inst.abar.has_two_distinct_columns() {
        return Err(Error::TrivialPolytope);
    }
    let n = inst.abar.len();
    let zc = [inst.zg_center()?];
    let lower = match inst.hat()? {
        Some(hat) => local_phi_lower_bound(&hat, &zc)?,
        None => local_phi_lower_bound(&inst.top()?, &zc)?,
    };

    let mut search = Search { inst, best: f64::INFINITY, best_x: Vec::new(), best_z: Vec::new(), evaluated: 0 };
    for &zj in &inst.zg_face {
        let z = SimplexPoint::vertex(n, zj)?;
        for i in 0..n {
            let mut x = vec![0.0; n];
            x[i] = 1.0;
            search.eval(&x, &z);
        }
        for i in 0..n {
            for j in i + 1..n {
                search.edge(i, j, &z);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all: Vec<usize> = (0..n).collect();
    for _ in 0..samples {
        let x = random_simplex(&mut rng, n, &all);
        let z = SimplexPoint::from_approximate(random_simplex(&mut rng, n, &inst.zg_face))?;
        search.eval(&x, &z);
    }
    if !search.best.is_finite() {
        return Err(Error::NumericalBreakdown("no admissible (x, z) pair".into()));
    }
    Ok(BarPhiBounds {
        lower,
        upper: search.best,
        argmin_x: search.best_x,
        argmin_z: search.best_z,
        candidates: search.evaluated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::phi::phi_pair;
    use approx::assert_abs_diff_eq;

    fn sp(w: &[f64]) -> SimplexPoint {
        SimplexPoint::new(w.to_vec()).unwrap()
    }

    fn example_two(t: f64) -> ScaledInstance {
        let abar = AtomMatrix::from_rows(&[vec![t, t, -t], vec![0.0, 0.0, 0.0], vec![t, 0.0, 0.0]]).unwrap();
        scaled_instance(&abar, &DVector::zeros(2)).unwrap()
    }

    fn example_three(t: f64) -> ScaledInstance {
        let abar = AtomMatrix::from_rows(&[vec![t, t, -t], vec![t, 0.0, 0.0]]).unwrap();
        scaled_instance(&abar, &DVector::zeros(1)).unwrap()
    }

    fn example_four(t: f64) -> ScaledInstance {
        let abar = AtomMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0], vec![0.0, t]]).unwrap();
        scaled_instance(&abar, &DVector::zeros(2)).unwrap()
    }

    fn closed_form(t: f64) -> f64 {
        if t < 0.125 {
            2.0 * t
        } else {
            (t - 1.0 / 16.0).sqrt()
        }
    }

    #[test]
    fn anchor_face_and_spread() {
        assert_eq!(example_two(5.0).zg_face, vec![1, 2]);
        let e3 = example_three(7.0);
        assert_eq!(e3.zg_face, vec![1, 2]);
        assert_abs_diff_eq!(e3.delta_g, 7.0, epsilon = 1e-12);
        let flat = AtomMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![-1.0, -2.0, -3.0]]).unwrap();
        let inst = scaled_instance(&flat, &DVector::from_vec(vec![1.0])).unwrap();
        assert_eq!(inst.delta_g, 0.0);
        assert_eq!(inst.zg_face, vec![0, 1, 2]);
    }

    #[test]
    fn norm_g_examples() {
        let g = DVector::zeros(2);
        assert_eq!(norm_g(&DVector::zeros(3), &g).unwrap(), 0.0);
        assert_abs_diff_eq!(norm_g(&DVector::from_vec(vec![3.0, 4.0, 0.0]), &g).unwrap(), 5.0);
        assert_abs_diff_eq!(norm_g(&DVector::from_vec(vec![0.0, 0.0, 4.0]), &g).unwrap(), 2.0);
        assert!(norm_g(&DVector::zeros(2), &g).is_err());
    }

    #[test]
    fn hat_matrix_of_third_example() {
        let hat = example_three(4.0).hat().unwrap().unwrap();
        let expected = AtomMatrix::from_rows(&[vec![4.0, 4.0, -4.0], vec![2.0, 0.0, 0.0]]).unwrap();
        assert!((hat.matrix() - expected.matrix()).abs().max() < 1e-12);
    }

    #[test]
    fn flat_functional_matches_top_rows() {
        let abar = AtomMatrix::from_rows(&[vec![0.0, 2.0, 1.0], vec![0.0, 0.0, 3.0], vec![0.0, -2.0, -1.0]])
            .unwrap();
        let inst = scaled_instance(&abar, &DVector::from_vec(vec![1.0, 0.0])).unwrap();
        assert_eq!(inst.delta_g, 0.0);
        let x = sp(&[0.0, 0.3, 0.7]);
        let z = sp(&[1.0, 0.0, 0.0]);
        let bar = bar_phi_pair(&inst, &x, &z).unwrap().value;
        let top = phi_pair(&inst.top().unwrap(), &x, &z).unwrap().value;
        assert_abs_diff_eq!(bar, top, epsilon = 1e-9);
    }

    #[test]
    fn bar_phi_dominates_hat_phi() {
        let inst = example_three(2.0);
        let hat = inst.hat().unwrap().unwrap();
        let z = sp(&[0.0, 0.4, 0.6]);
        for x in [[1.0, 0.0, 0.0], [0.5, 0.0, 0.5], [0.2, 0.3, 0.5]] {
            let x = sp(&x);
            let bar = bar_phi_pair(&inst, &x, &z).unwrap().value;
            let h = phi_pair(&hat, &x, &z).unwrap().value;
            assert!(bar >= h - 1e-9, "{bar} < {h}");
        }
    }

    #[test]
    fn example_four_value() {
        let inst = example_four(3.0);
        let r = bar_phi_pair(&inst, &sp(&[0.0, 1.0]), &sp(&[1.0, 0.0])).unwrap();
        assert_abs_diff_eq!(r.value, 2.0, epsilon = 1e-9);
        let d = bar_phi_pair_dual(&inst, &sp(&[0.0, 1.0]), &sp(&[1.0, 0.0])).unwrap();
        assert_abs_diff_eq!(d, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn witness_lies_along_scaled_direction() {
        let inst = example_two(1.0);
        let x = sp(&[0.5, 0.2, 0.3]);
        let z = sp(&[0.0, 1.0, 0.0]);
        let r = bar_phi_pair(&inst, &x, &z).unwrap();
        let diff = inst.abar.combine(&x).unwrap() - inst.abar.combine(&z).unwrap();
        let d = &diff / norm_g(&diff, &inst.g).unwrap();
        let gap = (&r.witness.u - &r.witness.v) - d * r.value;
        assert!(gap.norm() < 1e-8);
        assert!(r.witness.residual(&inst.abar) < 1e-8);
    }

    #[test]
    fn z_outside_anchor_face_is_rejected() {
        let inst = example_two(1.0);
        assert!(bar_phi_pair(&inst, &sp(&[0.0, 1.0, 0.0]), &sp(&[1.0, 0.0, 0.0])).is_err());
    }

    #[test]
    fn bounds_bracket_closed_forms() {
        for t in [1.0, 1.0 / 16.0] {
            let b = bar_phi_bounds(&example_two(t), 200, 7).unwrap();
            let exact = closed_form(t);
            assert!(b.lower <= exact + 1e-9 && exact <= b.upper + 1e-9, "t={t}: {b:?}");
        }
    }

    #[test]
    fn bounds_on_third_example() {
        let t = 1000.0;
        let b = bar_phi_bounds(&example_three(t), 50, 1).unwrap();
        assert!(b.lower >= 2.0 * t / (4.0 * t + 1.0).sqrt() - 1e-6, "{b:?}");
        assert!(b.upper >= closed_form(t) - 1e-9);
    }
}
