//! Face lattice of `conv(A)` as atom index sets.
//!
//! A face is identified with the atoms lying on it. The smallest face
//! containing a point `q` is computed with one LP (the atoms that carry
//! positive weight in *some* representation of `q`); the proper faces are
//! then generated by closing `F ∪ {a}` for every known face `F` and atom `a`.
//! Every face of dimension `d >= 1` arises this way from one of its facets,
//! so the traversal reaches the whole lattice. Each face is certified by a
//! margin LP that produces its supporting functional.

use std::collections::BTreeSet;

use nalgebra::DVector;
use rayon::prelude::*;

use super::{AtomMatrix, FaceDescriptor};
use crate::error::{Error, Result};
use crate::kernel::lp::{solve_lp, LinearProgram, LpStatus, Sense};

/// Largest atom count accepted by face enumeration.
pub const DEFAULT_FACE_ENUM_LIMIT: usize = 20;

/// Convex weights `λ` with `Σ λ_i p_i = q`, or `None` when `q ∉ conv(points)`.
pub(crate) fn hull_weights(points: &[DVector<f64>], q: &DVector<f64>) -> Result<Option<Vec<f64>>> {
    let n = points.len();
    let m = q.len();
    let mut lp = LinearProgram::new(Sense::Minimize, vec![0.0; n]);
    for r in 0..m {
        lp.add_eq(points.iter().map(|p| p[r]).collect(), q[r]);
    }
    lp.add_eq(vec![1.0; n], 1.0);
    let sol = solve_lp(&lp)?;
    Ok(match sol.status {
        LpStatus::Optimal => Some(sol.primal),
        _ => None,
    })
}

/// Atoms of the smallest face of `conv(A)` containing `q`, or `None` when
/// `q ∉ conv(A)`.
pub fn closure_of_point(a: &AtomMatrix, q: &DVector<f64>) -> Result<Option<Vec<usize>>> {
    if q.len() != a.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: q.len() });
    }
    let atoms = a.atoms();
    if hull_weights(&atoms, q)?.is_none() {
        return Ok(None);
    }
    let n = a.len();
    let m = a.dim();
    // Variables: λ (n), τ (1), s (n). The cone {(λ, τ): Aλ = qτ, Σλ = τ}
    // is scale invariant, so every atom usable in a representation of q can
    // reach s_i = 1 simultaneously.
    let nv = 2 * n + 1;
    let mut cost = vec![0.0; nv];
    cost[n + 1..].iter_mut().for_each(|c| *c = 1.0);
    let mut lp = LinearProgram::new(Sense::Maximize, cost);
    for r in 0..m {
        let mut row = vec![0.0; nv];
        for j in 0..n {
            row[j] = a.matrix()[(r, j)];
        }
        row[n] = -q[r];
        lp.add_eq(row, 0.0);
    }
    let mut row = vec![0.0; nv];
    row[..n].iter_mut().for_each(|c| *c = 1.0);
    row[n] = -1.0;
    lp.add_eq(row, 0.0);
    for j in 0..n {
        let mut row = vec![0.0; nv];
        row[n + 1 + j] = 1.0;
        row[j] = -1.0;
        lp.add_le(row.clone(), 0.0);
        let mut cap = vec![0.0; nv];
        cap[n + 1 + j] = 1.0;
        lp.add_le(cap, 1.0);
    }
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::NumericalBreakdown("face closure LP failed".into()));
    }
    let face: Vec<usize> = (0..n).filter(|&j| sol.primal[n + 1 + j] > 0.5).collect();
    if face.is_empty() {
        return Err(Error::NumericalBreakdown("face closure is empty".into()));
    }
    Ok(Some(face))
}

fn centroid(a: &AtomMatrix, indices: &[usize]) -> DVector<f64> {
    let mut c = DVector::zeros(a.dim());
    for &i in indices {
        c += a.matrix().column(i);
    }
    c / indices.len() as f64
}

/// Supporting functional `(p, c)` with `<p, a_i> = c` on `face` and
/// `<p, a_j> >= c + 1` elsewhere, or `None` when no such functional exists.
pub fn margin_witness(a: &AtomMatrix, face: &[usize]) -> Result<Option<(Vec<f64>, f64)>> {
    let m = a.dim();
    let n = a.len();
    let on_face: BTreeSet<usize> = face.iter().copied().collect();
    // Variables: p (m, free), c (free). Minimise |p|_1 surrogate-free: the
    // program is a pure feasibility problem.
    let mut lp = LinearProgram::new(Sense::Minimize, vec![0.0; m + 1]);
    for j in 0..=m {
        lp.set_free(j);
    }
    for i in 0..n {
        let mut row: Vec<f64> = a.matrix().column(i).iter().copied().collect();
        row.push(-1.0);
        if on_face.contains(&i) {
            lp.add_eq(row, 0.0);
        } else {
            lp.add_ge(row, 1.0);
        }
    }
    let sol = solve_lp(&lp)?;
    Ok(match sol.status {
        LpStatus::Optimal => Some((sol.primal[..m].to_vec(), sol.primal[m])),
        _ => None,
    })
}

/// All proper nonempty faces of `conv(A)` with the default size limit.
pub fn enumerate_proper_faces(a: &AtomMatrix) -> Result<Vec<FaceDescriptor>> {
    enumerate_proper_faces_with_limit(a, DEFAULT_FACE_ENUM_LIMIT)
}

/// All proper nonempty faces of `conv(A)`, sorted by atom index set.
pub fn enumerate_proper_faces_with_limit(a: &AtomMatrix, limit: usize) -> Result<Vec<FaceDescriptor>> {
    let n = a.len();
    if n > limit {
        return Err(Error::InstanceTooLarge { n, limit });
    }
    if !a.has_two_distinct_columns() {
        return Err(Error::TrivialPolytope);
    }
    let everything: Vec<usize> = (0..n).collect();

    let close = |indices: &[usize]| -> Result<Vec<usize>> {
        closure_of_point(a, &centroid(a, indices))?
            .ok_or_else(|| Error::NumericalBreakdown("centroid of atoms left the hull".into()))
    };

    let mut known: BTreeSet<Vec<usize>> = BTreeSet::new();
    let seeds: Vec<Vec<usize>> =
        (0..n).into_par_iter().map(|i| close(&[i])).collect::<Result<_>>()?;
    let mut frontier: Vec<Vec<usize>> = Vec::new();
    for f in seeds {
        if f != everything && known.insert(f.clone()) {
            frontier.push(f);
        }
    }
    while !frontier.is_empty() {
        let candidates: Vec<Vec<usize>> = frontier
            .par_iter()
            .flat_map_iter(|f| {
                (0..n).filter(move |j| f.binary_search(j).is_err()).map(move |j| {
                    let mut g = f.clone();
                    g.push(j);
                    g.sort_unstable();
                    g
                })
            })
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let closed: Vec<Vec<usize>> =
            candidates.par_iter().map(|g| close(g)).collect::<Result<_>>()?;
        frontier.clear();
        for f in closed {
            if f != everything && known.insert(f.clone()) {
                frontier.push(f);
            }
        }
    }

    known
        .into_par_iter()
        .map(|atoms| {
            let (functional, offset) = margin_witness(a, &atoms)?.ok_or_else(|| {
                Error::NumericalBreakdown(format!("no supporting functional for face {atoms:?}"))
            })?;
            Ok(FaceDescriptor { atom_indices: atoms, functional, offset })
        })
        .collect()
}

/// For each atom, whether it is a vertex of `conv(A)` (not a convex
/// combination of the atoms at other locations).
pub fn is_vertex_set(a: &AtomMatrix) -> Result<Vec<bool>> {
    (0..a.len())
        .map(|i| {
            let ai = a.atom(i);
            let others: Vec<DVector<f64>> =
                (0..a.len()).map(|j| a.atom(j)).filter(|aj| *aj != ai).collect();
            if others.is_empty() {
                return Ok(true);
            }
            Ok(hull_weights(&others, &ai)?.is_none())
        })
        .collect()
}

/// Atoms of the smallest face of `conv(A)` containing every point, or
/// `None` when some point lies outside the hull.
pub fn closure_of_points(a: &AtomMatrix, points: &[DVector<f64>]) -> Result<Option<Vec<usize>>> {
    let atoms = a.atoms();
    for p in points {
        if p.len() != a.dim() {
            return Err(Error::DimensionMismatch { expected: a.dim(), found: p.len() });
        }
        if hull_weights(&atoms, p)?.is_none() {
            return Ok(None);
        }
    }
    let mut c = DVector::zeros(a.dim());
    for p in points {
        c += p;
    }
    c /= points.len() as f64;
    closure_of_point(a, &c)
}

/// A face given only by its atom set (no functional).
pub type ClosedFace = Vec<usize>;

#[cfg(test)]
mod tests {
    use super::*;

    fn atoms(cols: &[&[f64]]) -> AtomMatrix {
        AtomMatrix::from_columns(&cols.iter().map(|c| c.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn check_margins(a: &AtomMatrix, faces: &[FaceDescriptor]) {
        for f in faces {
            for i in 0..a.len() {
                let val: f64 = a.matrix().column(i).iter().zip(&f.functional).map(|(x, p)| x * p).sum();
                if f.contains_atom(i) {
                    assert!((val - f.offset).abs() <= 1e-8, "equality fails on {f:?}");
                } else {
                    assert!(val > f.offset + 1e-8, "strict inequality fails on {f:?}");
                }
            }
        }
    }

    #[test]
    fn triangle_has_six_faces() {
        let a = atoms(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        let faces = enumerate_proper_faces(&a).unwrap();
        let sets: Vec<_> = faces.iter().map(|f| f.atom_indices.clone()).collect();
        assert_eq!(sets, vec![vec![0], vec![0, 1], vec![0, 2], vec![1], vec![1, 2], vec![2]]);
        check_margins(&a, &faces);
    }

    #[test]
    fn square_has_eight_faces() {
        let a = atoms(&[&[0.0, 0.0], &[1.0, 0.0], &[1.0, 1.0], &[0.0, 1.0]]);
        let faces = enumerate_proper_faces(&a).unwrap();
        assert_eq!(faces.len(), 8);
        assert_eq!(faces.iter().filter(|f| f.atom_indices.len() == 1).count(), 4);
        assert_eq!(faces.iter().filter(|f| f.atom_indices.len() == 2).count(), 4);
        assert!(!faces.iter().any(|f| f.atom_indices == vec![0, 2]));
        check_margins(&a, &faces);
    }

    #[test]
    fn interior_and_repeated_atoms() {
        // Triangle plus centroid plus a repeated vertex.
        let a = atoms(&[&[0.0, 0.0], &[3.0, 0.0], &[0.0, 3.0], &[1.0, 1.0], &[3.0, 0.0]]);
        let faces = enumerate_proper_faces(&a).unwrap();
        assert_eq!(faces.len(), 6);
        assert!(faces.iter().all(|f| !f.contains_atom(3)));
        assert!(faces.iter().any(|f| f.atom_indices == vec![1, 4]));
        check_margins(&a, &faces);
    }

    #[test]
    fn lower_dimensional_polytope() {
        // A triangle embedded in R^3 (not full dimensional).
        let a = atoms(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let faces = enumerate_proper_faces(&a).unwrap();
        assert_eq!(faces.len(), 6);
        check_margins(&a, &faces);
    }

    #[test]
    fn enumeration_errors() {
        let same = atoms(&[&[1.0], &[1.0]]);
        assert!(matches!(enumerate_proper_faces(&same), Err(Error::TrivialPolytope)));
        let big = AtomMatrix::from_columns(&(0..21).map(|i| vec![i as f64]).collect::<Vec<_>>()).unwrap();
        assert!(matches!(enumerate_proper_faces(&big), Err(Error::InstanceTooLarge { n: 21, limit: 20 })));
    }

    #[test]
    fn vertex_flags() {
        let tri = atoms(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        assert_eq!(is_vertex_set(&tri).unwrap(), vec![true, true, true]);
        let with_centroid = atoms(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[1.0 / 3.0, 1.0 / 3.0]]);
        assert_eq!(is_vertex_set(&with_centroid).unwrap(), vec![true, true, true, false]);
        let line = atoms(&[&[0.0], &[1.0], &[2.0], &[3.0]]);
        assert_eq!(is_vertex_set(&line).unwrap(), vec![true, false, false, true]);
    }

    #[test]
    fn closure_of_points_examples() {
        let sq = atoms(&[&[0.0, 0.0], &[1.0, 0.0], &[1.0, 1.0], &[0.0, 1.0]]);
        let v = DVector::from_vec(vec![1.0, 0.0]);
        assert_eq!(closure_of_point(&sq, &v).unwrap(), Some(vec![1]));
        let edge = [DVector::from_vec(vec![0.2, 0.0]), DVector::from_vec(vec![0.7, 0.0])];
        assert_eq!(closure_of_points(&sq, &edge).unwrap(), Some(vec![0, 1]));
        let mid = DVector::from_vec(vec![0.5, 0.5]);
        assert_eq!(closure_of_point(&sq, &mid).unwrap(), Some(vec![0, 1, 2, 3]));
        let out = DVector::from_vec(vec![2.0, 0.5]);
        assert_eq!(closure_of_point(&sq, &out).unwrap(), None);
    }
}
