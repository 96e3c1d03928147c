//! The kernels against brute-force oracles that share no code with them.

mod common;

use common::*;
use fwas_core::experiments::instances::cube;
use fwas_core::kernel::polytope_distance;
use fwas_core::measures::{facial_distance, pdirw, phi_pair};
use fwas_core::polytope::{enumerate_proper_faces, AtomMatrix, SimplexPoint};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dv(p: P2) -> DVector<f64> {
    DVector::from_vec(p.to_vec())
}

fn random_points(rng: &mut ChaCha8Rng, k: usize, lo: f64, hi: f64) -> Vec<P2> {
    (0..k).map(|_| [rng.gen_range(lo..hi), rng.gen_range(lo..hi)]).collect()
}

fn matrix(points: &[P2]) -> AtomMatrix {
    AtomMatrix::from_columns(&points.iter().map(|p| p.to_vec()).collect::<Vec<_>>()).unwrap()
}

fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> SimplexPoint {
    let w: Vec<f64> = (0..n).map(|_| -rng.gen_range(1e-12f64..1.0).ln()).collect();
    SimplexPoint::from_approximate(w).unwrap()
}

#[test]
fn cube_faces_match_integer_direction_scan() {
    let a = cube(3).unwrap();
    let atoms: Vec<Vec<f64>> = a.atoms().iter().map(|c| c.iter().copied().collect()).collect();
    let oracle = exposed_sets_by_directions(&atoms, 1);
    let faces: std::collections::BTreeSet<Vec<usize>> =
        enumerate_proper_faces(&a).unwrap().into_iter().map(|f| f.atom_indices).collect();
    assert_eq!(oracle.len(), 26);
    assert_eq!(faces, oracle);
}

#[test]
fn planar_faces_match_monotone_chain_hull() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let n = rng.gen_range(3..=8);
        let pts = random_points(&mut rng, n, -1.0, 1.0);
        let hull = hull_indices(&pts);
        let h = hull.len();
        let mut expected: std::collections::BTreeSet<Vec<usize>> = hull.iter().map(|&i| vec![i]).collect();
        for k in 0..h {
            let mut e = vec![hull[k], hull[(k + 1) % h]];
            e.sort();
            expected.insert(e);
        }
        let faces: std::collections::BTreeSet<Vec<usize>> =
            enumerate_proper_faces(&matrix(&pts)).unwrap().into_iter().map(|f| f.atom_indices).collect();
        assert_eq!(faces, expected, "{pts:?}");
    }
}

#[test]
fn polytope_distance_matches_grid_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut checked = 0;
    while checked < 100 {
        let (ks, kt) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        let s = random_points(&mut rng, ks, -1.0, 1.0);
        let shift = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let t: Vec<P2> = random_points(&mut rng, kt, -1.0, 1.0)
            .into_iter()
            .map(|p| [p[0] + shift[0], p[1] + shift[1]])
            .collect();
        let oracle = grid_distance(&s, &t, 200);
        let sv: Vec<_> = s.iter().map(|p| dv(*p)).collect();
        let tv: Vec<_> = t.iter().map(|p| dv(*p)).collect();
        let d = polytope_distance(&sv, &tv).unwrap();
        assert!(d.distance <= oracle + 1e-9, "kernel {} above grid {oracle}", d.distance);
        assert!((d.distance - oracle).abs() <= 1e-3, "kernel {} grid {oracle}", d.distance);
        checked += 1;
    }
}

#[test]
fn pdirw_matches_subset_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..60 {
        let n = rng.gen_range(2..=6);
        let pts = random_points(&mut rng, n, -1.0, 1.0);
        let a = matrix(&pts);
        let u = a.combine(&random_weights(&mut rng, n)).unwrap();
        let r = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let got = pdirw(&a, &dv(r), &u).unwrap();
        let want = pdirw_bruteforce(&pts, r, [u[0], u[1]]);
        assert!((got - want).abs() <= 1e-9, "pdirw {got} vs brute force {want}");
    }
}

#[test]
fn phi_pair_matches_breakpoint_oracle() {
    // Unit basis in the plane: the segment has length sqrt(2).
    let e = [[1.0, 0.0], [0.0, 1.0]];
    let v = phi_pair_breakpoints(&e, &[0], [1.0, -1.0]);
    assert!((v - 2f64.sqrt()).abs() <= 1e-12);
    let r = phi_pair(&matrix(&e), &SimplexPoint::vertex(2, 0).unwrap(), &SimplexPoint::vertex(2, 1).unwrap()).unwrap();
    assert!((r.value - v).abs() <= 1e-9);

    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..80 {
        let n = rng.gen_range(2..=6);
        let pts = random_points(&mut rng, n, -1.0, 1.0);
        let a = matrix(&pts);
        let x = random_weights(&mut rng, n);
        let z = random_weights(&mut rng, n);
        let d = a.combine(&x).unwrap() - a.combine(&z).unwrap();
        if d.norm() < 1e-3 {
            continue;
        }
        let want = phi_pair_breakpoints(&pts, x.support(), [d[0], d[1]]);
        let got = phi_pair(&a, &x, &z).unwrap().value;
        assert!((got - want).abs() <= 1e-7 * want.max(1.0), "phi_pair {got} vs oracle {want}");
    }
}

#[test]
fn facial_distance_matches_pairwise_face_scan() {
    // Planar hull: Φ is the smallest distance between a hull vertex or edge
    // and the hull of the remaining atoms.
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..30 {
        let n = rng.gen_range(3..=5);
        let pts = random_points(&mut rng, n, -1.0, 1.0);
        let hull = hull_indices(&pts);
        let h = hull.len();
        let mut faces: Vec<Vec<usize>> = hull.iter().map(|&i| vec![i]).collect();
        for k in 0..h {
            faces.push(vec![hull[k], hull[(k + 1) % h]]);
        }
        let mut best = f64::INFINITY;
        for f in &faces {
            let face: Vec<P2> = f.iter().map(|&i| pts[i]).collect();
            let rest: Vec<P2> = (0..n).filter(|i| !f.contains(i)).map(|i| pts[i]).collect();
            // The face and conv(rest) are disjoint planar hulls, so the
            // closest pair joins a vertex of one to a vertex or edge of the other.
            let mut d = f64::INFINITY;
            for q in &rest {
                d = d.min(if face.len() == 1 {
                    point_hull_distance(face[0], &[*q])
                } else {
                    point_segment_distance(*q, face[0], face[1])
                });
            }
            for w in 0..rest.len() {
                for v in w + 1..rest.len() {
                    for p in &face {
                        d = d.min(point_segment_distance(*p, rest[w], rest[v]));
                    }
                }
            }
            best = best.min(d);
        }
        let got = facial_distance(&matrix(&pts)).unwrap().value;
        assert!((got - best).abs() <= 1e-9, "Φ {got} vs scan {best} on {pts:?}");
    }
}

