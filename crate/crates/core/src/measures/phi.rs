//! Φ(A,x,z), the facial distance Φ(A), its localized lower bound and the
//! pyramidal directional width.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::PhiReport;
use crate::error::{Error, Result};
use crate::kernel::lp::{solve_lp, LinearProgram, LpStatus, Sense};
use crate::kernel::mnp::polytope_distance;
use crate::polytope::{
    closure_of_points, enumerate_proper_faces, hull_weights, margin_witness, AtomMatrix, FaceDescriptor,
    SimplexPoint, WitnessPair,
};

/// `A(x - z)` below this norm is treated as zero.
pub const ZERO_DIRECTION_TOL: f64 = 1e-10;

/// Optimal `(p, w, y, λ)` of the longest-segment LP pair along `d`.
#[derive(Debug, Clone)]
pub(crate) struct Segment {
    pub lambda: f64,
    pub p: DVector<f64>,
    pub w: SimplexPoint,
    pub y: SimplexPoint,
}

/// Solves `min { t + τ : <a_i, p> <= t (i ∈ I), <a_j, p> >= -τ (all j), <d, p> = 1 }`.
/// The duals of the two inequality blocks are `w` and `y`, and the dual of
/// the normalisation row is `λ`, with `A w - A y = λ d`.
pub(crate) fn longest_segment(a: &DMatrix<f64>, support: &[usize], d: &DVector<f64>) -> Result<Segment> {
    let m = a.nrows();
    let n = a.ncols();
    let nv = m + 2;
    let mut cost = vec![0.0; nv];
    cost[m] = 1.0;
    cost[m + 1] = 1.0;
    let mut lp = LinearProgram::new(Sense::Minimize, cost);
    for j in 0..nv {
        lp.set_free(j);
    }
    for &i in support {
        let mut row: Vec<f64> = a.column(i).iter().map(|v| -v).collect();
        row.push(1.0);
        row.push(0.0);
        lp.add_ge(row, 0.0);
    }
    for j in 0..n {
        let mut row: Vec<f64> = a.column(j).iter().copied().collect();
        row.push(0.0);
        row.push(1.0);
        lp.add_ge(row, 0.0);
    }
    let mut row: Vec<f64> = d.iter().copied().collect();
    row.push(0.0);
    row.push(0.0);
    lp.add_eq(row, 1.0);

    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::Infeasible),
        LpStatus::Unbounded => return Err(Error::Unbounded),
    }
    let mut w = vec![0.0; n];
    for (k, &i) in support.iter().enumerate() {
        w[i] = sol.ge_duals[k];
    }
    let y = sol.ge_duals[support.len()..].to_vec();
    Ok(Segment {
        lambda: sol.objective,
        p: DVector::from_column_slice(&sol.primal[..m]),
        w: SimplexPoint::from_approximate(w)?,
        y: SimplexPoint::from_approximate(y)?,
    })
}

/// `max { λ : w, y ∈ Δ, I(w) ⊆ I, A(w - y) = λ d, λ >= 0 }` solved directly.
pub(crate) fn longest_segment_dual(a: &DMatrix<f64>, support: &[usize], d: &DVector<f64>) -> Result<f64> {
    let m = a.nrows();
    let n = a.ncols();
    let k = support.len();
    let nv = k + n + 1;
    let mut cost = vec![0.0; nv];
    cost[nv - 1] = 1.0;
    let mut lp = LinearProgram::new(Sense::Maximize, cost);
    for r in 0..m {
        let mut row = vec![0.0; nv];
        for (c, &i) in support.iter().enumerate() {
            row[c] = a[(r, i)];
        }
        for j in 0..n {
            row[k + j] = -a[(r, j)];
        }
        row[nv - 1] = -d[r];
        lp.add_eq(row, 0.0);
    }
    let mut row = vec![0.0; nv];
    row[..k].iter_mut().for_each(|c| *c = 1.0);
    lp.add_eq(row, 1.0);
    let mut row = vec![0.0; nv];
    row[k..k + n].iter_mut().for_each(|c| *c = 1.0);
    lp.add_eq(row, 1.0);
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.objective),
        LpStatus::Infeasible => Err(Error::Infeasible),
        LpStatus::Unbounded => Err(Error::Unbounded),
    }
}

fn check_pair(a: &AtomMatrix, x: &SimplexPoint, z: &SimplexPoint) -> Result<DVector<f64>> {
    if x.len() != a.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), found: x.len() });
    }
    if z.len() != a.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), found: z.len() });
    }
    let diff = a.combine(x)? - a.combine(z)?;
    if diff.norm() <= ZERO_DIRECTION_TOL {
        return Err(Error::ZeroDirection);
    }
    Ok(diff)
}

/// Φ(A,x,z) with the optimal `p` and the longest-segment witnesses `u = Aw`,
/// `v = Ay`, `u - v = Φ d`.
pub fn phi_pair(a: &AtomMatrix, x: &SimplexPoint, z: &SimplexPoint) -> Result<PhiReport> {
    let diff = check_pair(a, x, z)?;
    let d = &diff / diff.norm();
    let seg = longest_segment(a.matrix(), x.support(), &d)?;
    let u = a.combine(&seg.w)?;
    let v = a.combine(&seg.y)?;
    Ok(PhiReport {
        value: seg.lambda,
        minimizing_face: None,
        witness: WitnessPair { u, v, w: seg.w, y: seg.y },
        optimal_p: Some(seg.p),
    })
}

/// Φ(A,x,z) computed from the λ-maximisation side only.
pub fn phi_pair_dual(a: &AtomMatrix, x: &SimplexPoint, z: &SimplexPoint) -> Result<f64> {
    let diff = check_pair(a, x, z)?;
    let d = &diff / diff.norm();
    longest_segment_dual(a.matrix(), x.support(), &d)
}

/// Distance between one proper face and the hull of the remaining atoms.
#[derive(Debug, Clone)]
pub struct FaceDistance {
    pub face: FaceDescriptor,
    pub distance: f64,
    /// `u` on `conv(A \ F)`, `v` on `F`.
    pub witness: WitnessPair,
}

fn expand(n: usize, indices: &[usize], weights: &[f64]) -> Result<SimplexPoint> {
    let mut full = vec![0.0; n];
    for (&i, &c) in indices.iter().zip(weights) {
        full[i] = c;
    }
    SimplexPoint::from_approximate(full)
}

fn face_distance(a: &AtomMatrix, face: FaceDescriptor) -> Result<FaceDistance> {
    let n = a.len();
    let outside = face.complement(n);
    let pd = polytope_distance(&a.select(&outside), &a.select(&face.atom_indices))?;
    let w = expand(n, &outside, &pd.s_weights)?;
    let y = expand(n, &face.atom_indices, &pd.t_weights)?;
    Ok(FaceDistance {
        face,
        distance: pd.distance,
        witness: WitnessPair { u: pd.u, v: pd.v, w, y },
    })
}

/// `dist(F, conv(A \ F))` for every proper face, in face-enumeration order.
pub fn face_distance_table(a: &AtomMatrix) -> Result<Vec<FaceDistance>> {
    let faces = enumerate_proper_faces(a)?;
    faces.into_par_iter().map(|f| face_distance(a, f)).collect()
}

fn argmin_distance(table: Vec<FaceDistance>) -> Option<FaceDistance> {
    let mut best: Option<FaceDistance> = None;
    for entry in table {
        if best.as_ref().map_or(true, |b| entry.distance < b.distance) {
            best = Some(entry);
        }
    }
    best
}

fn report_from(entry: FaceDistance) -> PhiReport {
    let diff = &entry.witness.u - &entry.witness.v;
    let norm = diff.norm();
    let p = if norm > 0.0 { Some(diff / norm) } else { None };
    PhiReport {
        value: entry.distance,
        minimizing_face: Some(entry.face),
        witness: entry.witness,
        optimal_p: p,
    }
}

/// Φ(A) as the smallest face-to-complement distance. Ties go to the face
/// that comes first in enumeration order.
pub fn facial_distance(a: &AtomMatrix) -> Result<PhiReport> {
    let table = face_distance_table(a)?;
    argmin_distance(table).map(report_from).ok_or(Error::TrivialPolytope)
}

/// Result of [`smallest_containing_face`].
#[derive(Debug, Clone, PartialEq)]
pub enum ContainingFace {
    Face(FaceDescriptor),
    Whole,
}

/// Intersection of all faces of `conv(A)` containing every point.
pub fn smallest_containing_face(a: &AtomMatrix, points: &[DVector<f64>]) -> Result<ContainingFace> {
    if points.is_empty() {
        return Err(Error::InvalidInput("no points given".into()));
    }
    let atoms = closure_of_points(a, points)?.ok_or(Error::OutsideHull)?;
    if atoms.len() == a.len() {
        return Ok(ContainingFace::Whole);
    }
    let (functional, offset) = margin_witness(a, &atoms)?
        .ok_or_else(|| Error::NumericalBreakdown("closed face has no supporting functional".into()))?;
    Ok(ContainingFace::Face(FaceDescriptor { atom_indices: atoms, functional, offset }))
}

/// Lower bound on Φ(A,Z): the smallest `dist(G, conv(A \ G))` over the
/// nonempty faces `G` of the smallest face containing `AZ`.
pub fn local_phi_lower_bound(a: &AtomMatrix, z: &[SimplexPoint]) -> Result<f64> {
    Ok(local_phi_lower_bound_report(a, z)?.value)
}

/// [`local_phi_lower_bound`] together with the minimising face and witness.
pub fn local_phi_lower_bound_report(a: &AtomMatrix, z: &[SimplexPoint]) -> Result<PhiReport> {
    if z.is_empty() {
        return Err(Error::InvalidInput("Z is empty".into()));
    }
    if !a.has_two_distinct_columns() {
        return Err(Error::TrivialPolytope);
    }
    let points = z.iter().map(|zi| a.combine(zi)).collect::<Result<Vec<_>>>()?;
    let table = face_distance_table(a)?;
    let table = match smallest_containing_face(a, &points)? {
        ContainingFace::Whole => table,
        ContainingFace::Face(f) => table
            .into_iter()
            .filter(|e| e.face.atom_indices.iter().all(|i| f.contains_atom(*i)))
            .collect(),
    };
    argmin_distance(table)
        .map(report_from)
        .ok_or_else(|| Error::NumericalBreakdown("containing face has no subfaces".into()))
}

/// Relative gap used to group atoms with equal `<r, a>` in [`pdirw`].
const LEVEL_TOL: f64 = 1e-12;

/// PdirW(A, r, u) = min over atom sets `S` with `u ∈ conv(S)` of
/// `max_{a ∈ A, s ∈ S} <r/|r|, a - s>`.
///
/// Only the smallest `<r, s>` over `S` matters, and enlarging `S` by atoms
/// with larger values never hurts, so the optimal `S` is a superlevel set
/// of `<r, ·>`. The scan tests the superlevel sets from the top down.
pub fn pdirw(a: &AtomMatrix, r: &DVector<f64>, u: &DVector<f64>) -> Result<f64> {
    if r.len() != a.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: r.len() });
    }
    if u.len() != a.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: u.len() });
    }
    let norm = r.norm();
    if norm <= ZERO_DIRECTION_TOL {
        return Err(Error::ZeroDirection);
    }
    let rhat = r / norm;
    let values: Vec<f64> = (0..a.len()).map(|j| rhat.dot(&a.matrix().column(j))).collect();
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = values.iter().fold(1.0_f64, |s, v| s.max(v.abs()));
    let mut levels = values.clone();
    levels.sort_by(|x, y| y.total_cmp(x));
    levels.dedup_by(|x, y| (*y - *x).abs() <= LEVEL_TOL * scale);
    for &tau in &levels {
        let s: Vec<usize> = (0..a.len()).filter(|&j| values[j] >= tau - LEVEL_TOL * scale).collect();
        if hull_weights(&a.select(&s), u)?.is_some() {
            let low = s.iter().map(|&j| values[j]).fold(f64::INFINITY, f64::min);
            return Ok(top - low);
        }
    }
    Err(Error::OutsideHull)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cols(c: &[&[f64]]) -> AtomMatrix {
        AtomMatrix::from_columns(&c.iter().map(|v| v.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn sp(w: &[f64]) -> SimplexPoint {
        SimplexPoint::new(w.to_vec()).unwrap()
    }

    fn cube(m: usize) -> AtomMatrix {
        let columns: Vec<Vec<f64>> = (0..1usize << m)
            .map(|b| (0..m).map(|i| ((b >> i) & 1) as f64).collect())
            .collect();
        AtomMatrix::from_columns(&columns).unwrap()
    }

    fn identity(m: usize) -> AtomMatrix {
        AtomMatrix::from_matrix(DMatrix::identity(m, m)).unwrap()
    }

    fn m_example(m_big: f64, n: usize) -> AtomMatrix {
        let mut top = vec![0.0; n];
        top[0] = m_big;
        let mut bottom = vec![0.5, 0.5];
        bottom.extend((3..=n).map(|k| 1.0 / k as f64));
        AtomMatrix::from_rows(&[top, bottom]).unwrap()
    }

    #[test]
    fn phi_pair_examples() {
        let a = identity(2);
        let r = phi_pair(&a, &sp(&[1.0, 0.0]), &sp(&[0.0, 1.0])).unwrap();
        assert_abs_diff_eq!(r.value, 2f64.sqrt(), epsilon = 1e-10);
        assert_abs_diff_eq!(r.witness.distance(), r.value, epsilon = 1e-8);
        assert!(r.witness.residual(&a) < 1e-8);

        let seg = cols(&[&[0.0], &[1.0]]);
        let r = phi_pair(&seg, &sp(&[0.0, 1.0]), &sp(&[1.0, 0.0])).unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r.witness.distance(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn dual_matches_primal_on_examples() {
        let a = identity(2);
        let v = phi_pair_dual(&a, &sp(&[1.0, 0.0]), &sp(&[0.0, 1.0])).unwrap();
        assert_abs_diff_eq!(v, 2f64.sqrt(), epsilon = 1e-10);
        let seg = cols(&[&[0.0], &[1.0]]);
        let v = phi_pair_dual(&seg, &sp(&[0.0, 1.0]), &sp(&[1.0, 0.0])).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn repeated_atoms_keep_positive_value() {
        let a = cols(&[&[0.0, 0.0], &[0.0, 0.0], &[1.0, 2.0]]);
        let x = sp(&[0.5, 0.5, 0.0]);
        let z = sp(&[0.0, 0.0, 1.0]);
        let p = phi_pair(&a, &x, &z).unwrap();
        let d = phi_pair_dual(&a, &x, &z).unwrap();
        assert!(p.value >= 5f64.sqrt() - 1e-10);
        assert_abs_diff_eq!(p.value, d, epsilon = 1e-9);
    }

    #[test]
    fn zero_direction_is_rejected() {
        let a = identity(2);
        let x = sp(&[0.5, 0.5]);
        assert!(matches!(phi_pair(&a, &x, &x), Err(Error::ZeroDirection)));
        assert!(matches!(phi_pair_dual(&a, &x, &x), Err(Error::ZeroDirection)));
    }

    #[test]
    fn hat_matrix_of_third_example_at_t_one() {
        // A_hat = [[t, t, -t], [sqrt(t), 0, 0]] at t = 1; minimiser z = e_2,
        // x = (4t/(4t+1), 0, 1/(4t+1)).
        let a = cols(&[&[1.0, 1.0], &[1.0, 0.0], &[-1.0, 0.0]]);
        let r = phi_pair(&a, &sp(&[0.8, 0.0, 0.2]), &sp(&[0.0, 1.0, 0.0])).unwrap();
        assert_abs_diff_eq!(r.value, 2.0 / 5f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn cube_facial_distance() {
        let r = facial_distance(&cube(3)).unwrap();
        assert_abs_diff_eq!(r.value, 1.0 / 3f64.sqrt(), epsilon = 1e-10);
        assert_abs_diff_eq!(r.witness.distance(), r.value, epsilon = 1e-10);
    }

    #[test]
    fn simplex_facial_distance() {
        let r = facial_distance(&identity(4)).unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-10);
        let r = facial_distance(&identity(5)).unwrap();
        assert_abs_diff_eq!(r.value, 2.0 / (5.0 - 0.2f64).sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn facial_distance_witness_attains_phi_pair() {
        let a = cols(&[&[0.0, 0.0], &[3.0, 0.0], &[1.0, 2.0], &[2.5, 1.5]]);
        let r = facial_distance(&a).unwrap();
        let p = phi_pair(&a, &r.witness.w, &r.witness.y).unwrap();
        assert_abs_diff_eq!(p.value, r.value, epsilon = 1e-8);
    }

    #[test]
    fn trivial_polytope_is_rejected() {
        let a = cols(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert!(matches!(facial_distance(&a), Err(Error::TrivialPolytope)));
    }

    #[test]
    fn local_bound_on_m_example() {
        let a = m_example(100.0, 5);
        let z = [SimplexPoint::vertex(5, 0).unwrap()];
        assert!(local_phi_lower_bound(&a, &z).unwrap() >= 100.0);
        // The closest face pair is the edge [a_5, a_1] against the segment
        // [a_4, a_2]: min_s (100 s)^2 + (1/20 - 3s/10)^2, slightly below 1/20.
        let exact = (1.0f64 / 400.0 - 0.015f64.powi(2) / (1e4 + 0.09)).sqrt();
        let phi = facial_distance(&a).unwrap().value;
        assert_abs_diff_eq!(phi, exact, epsilon = 1e-12);
        assert!((phi - 1.0 / 20.0).abs() < 3e-7);
    }

    #[test]
    fn local_bound_with_full_z_is_facial_distance() {
        let a = cols(&[&[0.0, 0.0], &[3.0, 0.0], &[1.0, 2.0]]);
        let z = [SimplexPoint::uniform_on(3, &[0, 1, 2]).unwrap()];
        let lb = local_phi_lower_bound(&a, &z).unwrap();
        assert_abs_diff_eq!(lb, facial_distance(&a).unwrap().value, epsilon = 1e-12);
    }

    #[test]
    fn local_bound_at_triangle_vertex() {
        // Only G = {a_0} is a face of the vertex face: distance from (0,0)
        // to the segment [(3,0), (1,2)], which is 3/sqrt(2).
        let a = cols(&[&[0.0, 0.0], &[3.0, 0.0], &[1.0, 2.0]]);
        let z = [SimplexPoint::vertex(3, 0).unwrap()];
        let lb = local_phi_lower_bound(&a, &z).unwrap();
        assert_abs_diff_eq!(lb, 3.0 / 2f64.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn containing_face_examples() {
        let sq = cols(&[&[0.0, 0.0], &[1.0, 0.0], &[1.0, 1.0], &[0.0, 1.0]]);
        let v = DVector::from_vec(vec![1.0, 1.0]);
        match smallest_containing_face(&sq, &[v]).unwrap() {
            ContainingFace::Face(f) => assert_eq!(f.atom_indices, vec![2]),
            ContainingFace::Whole => panic!("vertex lies on a proper face"),
        }
        let c = DVector::from_vec(vec![0.5, 0.5]);
        assert_eq!(smallest_containing_face(&sq, &[c]).unwrap(), ContainingFace::Whole);
        let e = [DVector::from_vec(vec![0.2, 0.0]), DVector::from_vec(vec![0.7, 0.0])];
        match smallest_containing_face(&sq, &e).unwrap() {
            ContainingFace::Face(f) => assert_eq!(f.atom_indices, vec![0, 1]),
            ContainingFace::Whole => panic!("edge points lie on a proper face"),
        }
        let out = DVector::from_vec(vec![2.0, 0.0]);
        assert!(matches!(smallest_containing_face(&sq, &[out]), Err(Error::OutsideHull)));
    }

    #[test]
    fn pdirw_segment() {
        let a = cols(&[&[0.0], &[1.0]]);
        let r = DVector::from_vec(vec![1.0]);
        let u = DVector::from_vec(vec![0.0]);
        assert_abs_diff_eq!(pdirw(&a, &r, &u).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn pdirw_errors() {
        let a = cols(&[&[0.0], &[1.0]]);
        let u = DVector::from_vec(vec![0.5]);
        assert!(matches!(pdirw(&a, &DVector::from_vec(vec![0.0]), &u), Err(Error::ZeroDirection)));
        let out = DVector::from_vec(vec![2.0]);
        assert!(matches!(pdirw(&a, &DVector::from_vec(vec![1.0]), &out), Err(Error::OutsideHull)));
    }

    #[test]
    fn pdirw_attains_phi_at_witness() {
        let a = cube(2);
        let r = facial_distance(&a).unwrap();
        let dir = &r.witness.v - &r.witness.u;
        let w = pdirw(&a, &dir, &r.witness.u).unwrap();
        assert_abs_diff_eq!(w, r.value, epsilon = 1e-8);
    }
}
