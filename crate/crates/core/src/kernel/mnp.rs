//! Wolfe's minimum-norm-point algorithm and the polytope distance built on it.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative tolerance on the optimality certificate `|x|^2 - min_j <x, p_j>`.
const CERTIFICATE_TOL: f64 = 1e-14;

/// Affine weights at or below this are treated as leaving the corral.
const CORRAL_TOL: f64 = 1e-14;

/// Distances below this are reported as an exact intersection.
const ZERO_DISTANCE: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct MinNormPoint {
    pub point: DVector<f64>,
    /// Convex coefficients over the input points (zero off the final corral).
    pub coefficients: Vec<f64>,
}

impl MinNormPoint {
    /// `min_j <x, p_j - x>`; nonnegative up to rounding at the optimum.
    pub fn certificate(&self, points: &[DVector<f64>]) -> f64 {
        let xx = self.point.norm_squared();
        points.iter().map(|p| self.point.dot(p) - xx).fold(f64::INFINITY, f64::min)
    }
}

fn check_points(points: &[DVector<f64>]) -> Result<usize> {
    let first = points.first().ok_or_else(|| Error::InvalidInput("point list is empty".into()))?;
    let m = first.len();
    for p in points {
        if p.len() != m {
            return Err(Error::DimensionMismatch { expected: m, found: p.len() });
        }
    }
    Ok(m)
}

/// Minimiser of `|Σ α_i p_i|` over the affine hull of the corral, by least
/// squares on the differences `p_i - p_0` (SVD, so rank deficiency is harmless).
fn affine_minimizer(points: &[DVector<f64>], corral: &[usize]) -> Vec<f64> {
    let k = corral.len();
    if k == 1 {
        return vec![1.0];
    }
    let base = &points[corral[0]];
    let m = base.len();
    let diffs = DMatrix::from_fn(m, k - 1, |r, c| points[corral[c + 1]][r] - base[r]);
    let rhs = -base;
    let beta = diffs
        .svd(true, true)
        .solve(&rhs, 1e-13)
        .unwrap_or_else(|_| DVector::zeros(k - 1));
    let mut alpha = Vec::with_capacity(k);
    alpha.push(1.0 - beta.sum());
    alpha.extend(beta.iter().copied());
    alpha
}

fn combine(points: &[DVector<f64>], corral: &[usize], weights: &[f64]) -> DVector<f64> {
    let mut x = DVector::zeros(points[corral[0]].len());
    for (&i, &w) in corral.iter().zip(weights) {
        x.axpy(w, &points[i], 1.0);
    }
    x
}

/// Euclidean projection of the origin onto `conv(points)`.
pub fn min_norm_point(points: &[DVector<f64>]) -> Result<MinNormPoint> {
    check_points(points)?;
    let scale = points.iter().map(|p| p.norm_squared()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);

    let start = (0..points.len())
        .min_by(|&a, &b| points[a].norm_squared().total_cmp(&points[b].norm_squared()))
        .expect("nonempty");
    let mut corral = vec![start];
    let mut lambda = vec![1.0];
    let mut x = points[start].clone();

    let max_major = 50 * points.len() + 100;
    for _ in 0..max_major {
        // Major cycle: the point most violating the optimality condition.
        let xx = x.norm_squared();
        let (j, best) = points
            .iter()
            .enumerate()
            .map(|(i, p)| (i, x.dot(p)))
            .fold((usize::MAX, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
        if xx - best <= CERTIFICATE_TOL * scale || corral.contains(&j) {
            break;
        }
        corral.push(j);
        lambda.push(0.0);

        // Minor cycles: move toward the affine minimiser until it lies in
        // the relative interior of the corral.
        loop {
            let alpha = affine_minimizer(points, &corral);
            if alpha.iter().all(|&a| a > CORRAL_TOL) {
                lambda = alpha;
                x = combine(points, &corral, &lambda);
                break;
            }
            let theta = lambda
                .iter()
                .zip(&alpha)
                .filter(|(_, &a)| a <= CORRAL_TOL)
                .map(|(&l, &a)| if l - a > 0.0 { l / (l - a) } else { 0.0 })
                .fold(1.0_f64, f64::min)
                .clamp(0.0, 1.0);
            for (l, a) in lambda.iter_mut().zip(&alpha) {
                *l = (1.0 - theta) * *l + theta * a;
            }
            // Drop at least the blocking point.
            let blocking = lambda
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
                .expect("nonempty corral");
            let mut keep_c = Vec::with_capacity(corral.len());
            let mut keep_l = Vec::with_capacity(corral.len());
            for (idx, (&c, &l)) in corral.iter().zip(&lambda).enumerate() {
                if idx != blocking && l > CORRAL_TOL {
                    keep_c.push(c);
                    keep_l.push(l);
                }
            }
            if keep_c.is_empty() {
                keep_c.push(corral[blocking]);
                keep_l.push(1.0);
            }
            let total: f64 = keep_l.iter().sum();
            keep_l.iter_mut().for_each(|l| *l /= total);
            corral = keep_c;
            lambda = keep_l;
            x = combine(points, &corral, &lambda);
            if corral.len() == 1 {
                break;
            }
        }
    }

    let mut coefficients = vec![0.0; points.len()];
    for (&i, &l) in corral.iter().zip(&lambda) {
        coefficients[i] = l;
    }
    Ok(MinNormPoint { point: x, coefficients })
}

/// Closest pair between `conv(S)` and `conv(T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolytopeDistance {
    pub distance: f64,
    pub u: DVector<f64>,
    pub v: DVector<f64>,
    /// Convex weights on `S` with `Σ s_weights_i s_i = u`.
    pub s_weights: Vec<f64>,
    /// Convex weights on `T` with `Σ t_weights_j t_j = v`.
    pub t_weights: Vec<f64>,
}

/// Distance between two hulls via the minimum-norm point of the
/// Minkowski difference generators `s_i - t_j`.
pub fn polytope_distance(s: &[DVector<f64>], t: &[DVector<f64>]) -> Result<PolytopeDistance> {
    let ms = check_points(s)?;
    let mt = check_points(t)?;
    if ms != mt {
        return Err(Error::DimensionMismatch { expected: ms, found: mt });
    }
    let mut generators = Vec::with_capacity(s.len() * t.len());
    for si in s {
        for tj in t {
            generators.push(si - tj);
        }
    }
    let mnp = min_norm_point(&generators)?;
    let mut s_weights = vec![0.0; s.len()];
    let mut t_weights = vec![0.0; t.len()];
    for (idx, &c) in mnp.coefficients.iter().enumerate() {
        if c != 0.0 {
            s_weights[idx / t.len()] += c;
            t_weights[idx % t.len()] += c;
        }
    }
    let weighted = |pts: &[DVector<f64>], w: &[f64]| {
        let mut acc = DVector::zeros(ms);
        for (p, &c) in pts.iter().zip(w) {
            if c != 0.0 {
                acc.axpy(c, p, 1.0);
            }
        }
        acc
    };
    let u = weighted(s, &s_weights);
    let mut v = weighted(t, &t_weights);
    let mut distance = (&u - &v).norm();
    if distance < ZERO_DISTANCE {
        distance = 0.0;
        v = u.clone();
    }
    Ok(PolytopeDistance { distance, u, v, s_weights, t_weights })
}
