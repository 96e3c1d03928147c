//! Independent brute-force oracles shared by the integration tests. None of
//! them calls into the LP, min-norm-point or face-enumeration code.

#![allow(dead_code)]

pub type P2 = [f64; 2];

fn sub(a: P2, b: P2) -> P2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn dot(a: P2, b: P2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn cross(a: P2, b: P2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn norm(a: P2) -> f64 {
    dot(a, a).sqrt()
}

pub fn point_segment_distance(p: P2, a: P2, b: P2) -> f64 {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    if len2 == 0.0 {
        return norm(sub(p, a));
    }
    let t = (dot(sub(p, a), ab) / len2).clamp(0.0, 1.0);
    norm(sub(p, [a[0] + t * ab[0], a[1] + t * ab[1]]))
}

/// `p ∈ conv(pts)` for at most three planar points, with a small tolerance.
pub fn in_hull_small(p: P2, pts: &[P2], tol: f64) -> bool {
    match pts.len() {
        1 => norm(sub(p, pts[0])) <= tol,
        2 => point_segment_distance(p, pts[0], pts[1]) <= tol,
        3 => {
            let area = cross(sub(pts[1], pts[0]), sub(pts[2], pts[0]));
            if area.abs() <= 1e-14 {
                return (0..3).any(|i| point_segment_distance(p, pts[i], pts[(i + 1) % 3]) <= tol);
            }
            let s = area.signum();
            let inside = (0..3).all(|i| s * cross(sub(pts[(i + 1) % 3], pts[i]), sub(p, pts[i])) >= -tol);
            inside || (0..3).any(|i| point_segment_distance(p, pts[i], pts[(i + 1) % 3]) <= tol)
        }
        _ => panic!("at most three points"),
    }
}

/// Exact distance from `p` to the hull of at most three planar points.
pub fn point_hull_distance(p: P2, pts: &[P2]) -> f64 {
    if in_hull_small(p, pts, 0.0) {
        return 0.0;
    }
    match pts.len() {
        1 => norm(sub(p, pts[0])),
        2 => point_segment_distance(p, pts[0], pts[1]),
        _ => (0..3).map(|i| point_segment_distance(p, pts[i], pts[(i + 1) % 3])).fold(f64::INFINITY, f64::min),
    }
}

/// Convex-coefficient grid of the given resolution on `k` generators.
pub fn coefficient_grid(k: usize, resolution: usize) -> Vec<Vec<f64>> {
    let h = 1.0 / resolution as f64;
    match k {
        1 => vec![vec![1.0]],
        2 => (0..=resolution).map(|i| vec![i as f64 * h, 1.0 - i as f64 * h]).collect(),
        3 => {
            let mut out = Vec::new();
            for i in 0..=resolution {
                for j in 0..=resolution - i {
                    let (a, b) = (i as f64 * h, j as f64 * h);
                    out.push(vec![a, b, (1.0 - a - b).max(0.0)]);
                }
            }
            out
        }
        _ => panic!("at most three generators"),
    }
}

fn combine(pts: &[P2], w: &[f64]) -> P2 {
    let mut out = [0.0, 0.0];
    for (p, c) in pts.iter().zip(w) {
        out[0] += c * p[0];
        out[1] += c * p[1];
    }
    out
}

/// Grid oracle for `dist(conv S, conv T)` in the plane: the convex
/// coefficients of one side range over a grid of the given resolution and
/// the distance to the other hull is computed exactly; both orientations are
/// tried. The result is an upper bound within `O(resolution^-1)`.
pub fn grid_distance(s: &[P2], t: &[P2], resolution: usize) -> f64 {
    let one = |a: &[P2], b: &[P2]| {
        coefficient_grid(a.len(), resolution)
            .iter()
            .map(|w| point_hull_distance(combine(a, w), b))
            .fold(f64::INFINITY, f64::min)
    };
    one(s, t).min(one(t, s))
}

/// `u ∈ conv(S)` in the plane via Carathéodory: some triple, pair or point
/// of `S` contains `u`.
pub fn in_hull_caratheodory(u: P2, pts: &[P2], tol: f64) -> bool {
    let n = pts.len();
    for i in 0..n {
        if in_hull_small(u, &[pts[i]], tol) {
            return true;
        }
        for j in i + 1..n {
            if in_hull_small(u, &[pts[i], pts[j]], tol) {
                return true;
            }
            for k in j + 1..n {
                if in_hull_small(u, &[pts[i], pts[j], pts[k]], tol) {
                    return true;
                }
            }
        }
    }
    false
}

/// PdirW(A, r, u) by scanning every atom subset whose hull contains `u`.
pub fn pdirw_bruteforce(atoms: &[P2], r: P2, u: P2) -> f64 {
    let rn = norm(r);
    let rh = [r[0] / rn, r[1] / rn];
    let vals: Vec<f64> = atoms.iter().map(|a| dot(rh, *a)).collect();
    let top = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = atoms.len();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << n) {
        let s: Vec<P2> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| atoms[i]).collect();
        if in_hull_caratheodory(u, &s, 1e-10) {
            let low = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| vals[i]).fold(f64::INFINITY, f64::min);
            best = best.min(top - low);
        }
    }
    best
}

/// Φ(A, x, z) in the plane as the minimum over `<d/|d|, p> = 1` of
/// `max_{i ∈ I(x), j} <a_i - a_j, p>`. With `p = base + s d_perp` this is a
/// maximum of lines in `s`, minimized by checking every pairwise crossing.
pub fn phi_pair_breakpoints(atoms: &[P2], support: &[usize], d: P2) -> f64 {
    let d = [d[0] / norm(d), d[1] / norm(d)];
    let dn2 = dot(d, d);
    let base = [d[0] / dn2, d[1] / dn2];
    let perp = [-d[1], d[0]];
    let mut lines = Vec::new();
    for &i in support {
        for j in 0..atoms.len() {
            let g = sub(atoms[i], atoms[j]);
            lines.push((dot(g, perp), dot(g, base)));
        }
    }
    let eval = |s: f64| lines.iter().map(|(a, b)| a * s + b).fold(f64::NEG_INFINITY, f64::max);
    let mut best = eval(0.0);
    for (k, &(a1, b1)) in lines.iter().enumerate() {
        for &(a2, b2) in &lines[k + 1..] {
            // Slopes equal up to rounding are parallel lines; their far-off
            // crossing is noise.
            if (a1 - a2).abs() > 1e-9 {
                best = best.min(eval((b2 - b1) / (a1 - a2)));
            }
        }
    }
    best
}

/// Vertices of the planar hull of `pts` (no three collinear assumed), by
/// Andrew's monotone chain; returns indices into `pts`.
pub fn hull_indices(pts: &[P2]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    idx.sort_by(|&a, &b| pts[a][0].total_cmp(&pts[b][0]).then(pts[a][1].total_cmp(&pts[b][1])));
    let turn = |o: usize, a: usize, b: usize| cross(sub(pts[a], pts[o]), sub(pts[b], pts[o]));
    let mut lower: Vec<usize> = Vec::new();
    for &i in &idx {
        while lower.len() >= 2 && turn(lower[lower.len() - 2], lower[lower.len() - 1], i) <= 0.0 {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in idx.iter().rev() {
        while upper.len() >= 2 && turn(upper[upper.len() - 2], upper[upper.len() - 1], i) <= 0.0 {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Atom sets minimizing `<c, a>` over integer directions `c ∈ {-k..k}^m`.
pub fn exposed_sets_by_directions(atoms: &[Vec<f64>], k: i32) -> std::collections::BTreeSet<Vec<usize>> {
    let m = atoms[0].len();
    let mut out = std::collections::BTreeSet::new();
    let span = (2 * k + 1) as usize;
    for code in 0..span.pow(m as u32) {
        let mut c = vec![0.0; m];
        let mut rest = code;
        for ci in c.iter_mut() {
            *ci = (rest % span) as f64 - k as f64;
            rest /= span;
        }
        if c.iter().all(|v| *v == 0.0) {
            continue;
        }
        let vals: Vec<f64> = atoms.iter().map(|a| a.iter().zip(&c).map(|(x, y)| x * y).sum()).collect();
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let set: Vec<usize> = (0..atoms.len()).filter(|&i| vals[i] <= lo + 1e-12).collect();
        if set.len() < atoms.len() {
            out.insert(set);
        }
    }
    out
}
