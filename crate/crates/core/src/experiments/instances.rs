//! Reference instances and their closed-form values.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::polytope::AtomMatrix;
use crate::solver::Objective;

/// Vertices of `{0,1}^m`, atom `b` having bit `i` of `b` as coordinate `i`.
pub fn cube(m: usize) -> Result<AtomMatrix> {
    if m == 0 || m > 16 {
        return Err(Error::InvalidInput(format!("cube dimension {m} out of range")));
    }
    let columns: Vec<Vec<f64>> = (0..1usize << m)
        .map(|b| (0..m).map(|i| ((b >> i) & 1) as f64).collect())
        .collect();
    AtomMatrix::from_columns(&columns)
}

/// `{e_1, .., e_m}`.
pub fn simplex(m: usize) -> Result<AtomMatrix> {
    if m == 0 {
        return Err(Error::InvalidInput("simplex dimension must be positive".into()));
    }
    AtomMatrix::from_matrix(DMatrix::identity(m, m))
}

pub fn cube_phi(m: usize) -> f64 {
    1.0 / (m as f64).sqrt()
}

pub fn simplex_phi(m: usize) -> f64 {
    let m = m as f64;
    if m as usize % 2 == 0 {
        2.0 / m.sqrt()
    } else {
        2.0 / (m - 1.0 / m).sqrt()
    }
}

/// `[[cos 2θ, 1, -1], [sin 2θ, 0, 0]]` with `½|u|^2`; `Φ(A) = sin θ`, `diam = 2`.
pub fn example_one(theta: f64) -> Result<(AtomMatrix, Objective)> {
    if !(theta > 0.0 && theta < std::f64::consts::PI / 6.0) {
        return Err(Error::InvalidInput(format!("theta = {theta} outside (0, pi/6)")));
    }
    let a = AtomMatrix::from_rows(&[
        vec![(2.0 * theta).cos(), 1.0, -1.0],
        vec![(2.0 * theta).sin(), 0.0, 0.0],
    ])?;
    let obj = Objective::quadratic(DMatrix::identity(2, 2), DVector::zeros(2))?;
    Ok((a, obj))
}

/// Ratio bound `9 sin^2 θ` for the first example.
pub fn example_one_bound(theta: f64) -> f64 {
    9.0 * theta.sin().powi(2)
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("t = {t} must be positive")));
    }
    Ok(())
}

/// `A = [[t, t, -t], [t, 0, 0]]`, `Q = diag(1, 0)`, `b = (0, 1)`.
pub fn example_two(t: f64) -> Result<(AtomMatrix, Objective)> {
    check_t(t)?;
    let a = AtomMatrix::from_rows(&[vec![t, t, -t], vec![t, 0.0, 0.0]])?;
    let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
    let obj = Objective::quadratic(q, DVector::from_vec(vec![0.0, 1.0]))?;
    Ok((a, obj))
}

/// `Ā = [Q^{1/2}A; b^T A]` for the second example.
pub fn example_two_abar(t: f64) -> Result<AtomMatrix> {
    check_t(t)?;
    AtomMatrix::from_rows(&[vec![t, t, -t], vec![0.0, 0.0, 0.0], vec![t, 0.0, 0.0]])
}

/// Closed-form Φ̄_g for the second and third examples.
pub fn example_two_bar_phi(t: f64) -> f64 {
    if t < 0.125 {
        2.0 * t
    } else {
        (t - 1.0 / 16.0).sqrt()
    }
}

/// `Ā = [[t, t, -t], [t, 0, 0]]` with `g = 0`.
pub fn example_three_abar(t: f64) -> Result<AtomMatrix> {
    check_t(t)?;
    AtomMatrix::from_rows(&[vec![t, t, -t], vec![t, 0.0, 0.0]])
}

/// Closed-form Φ(Â, Z(g)) = 2t/sqrt(4t+1).
pub fn example_three_hat_phi(t: f64) -> f64 {
    2.0 * t / (4.0 * t + 1.0).sqrt()
}

/// `A = [[0, 1], [0, t]]`, `Q = diag(1, 0)`, `b = (0, 1)`.
pub fn example_four(t: f64) -> Result<(AtomMatrix, Objective)> {
    check_t(t)?;
    let a = AtomMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0, t]])?;
    let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
    let obj = Objective::quadratic(q, DVector::from_vec(vec![0.0, 1.0]))?;
    Ok((a, obj))
}

pub fn example_four_abar(t: f64) -> Result<AtomMatrix> {
    check_t(t)?;
    AtomMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0], vec![0.0, t]])
}

/// Closed-form Φ̄_g = sqrt(1 + t) for the fourth example.
pub fn example_four_bar_phi(t: f64) -> f64 {
    (1.0 + t).sqrt()
}

/// `[[M, 0, .., 0], [1/2, 1/2, 1/3, .., 1/n]]`.
pub fn m_example(big_m: f64, n: usize) -> Result<AtomMatrix> {
    if n < 3 {
        return Err(Error::InvalidInput("the M-example needs n >= 3".into()));
    }
    let mut top = vec![0.0; n];
    top[0] = big_m;
    let mut bottom = vec![0.5, 0.5];
    bottom.extend((3..=n).map(|k| 1.0 / k as f64));
    AtomMatrix::from_rows(&[top, bottom])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn closed_forms() {
        assert_abs_diff_eq!(cube_phi(3), 0.5773502691896258, epsilon = 1e-16);
        assert_abs_diff_eq!(simplex_phi(4), 1.0);
        assert_abs_diff_eq!(simplex_phi(5), 2.0 / 4.8f64.sqrt());
        assert_abs_diff_eq!(example_two_bar_phi(1.0 / 16.0), 0.125);
        assert_abs_diff_eq!(example_two_bar_phi(1.0), (15.0f64 / 16.0).sqrt());
        assert_abs_diff_eq!(example_three_hat_phi(1.0), 2.0 / 5f64.sqrt());
        assert_abs_diff_eq!(example_four_bar_phi(3.0), 2.0);
    }

    #[test]
    fn geometry_of_examples() {
        let (a, _) = example_one(std::f64::consts::PI / 10.0).unwrap();
        assert_abs_diff_eq!(a.diameter(), 2.0, epsilon = 1e-15);
        let (a, _) = example_four(5.0).unwrap();
        assert_eq!(a.len(), 2);
        assert!(example_one(1.0).is_err());
        assert!(example_two(0.0).is_err());
        assert_eq!(cube(3).unwrap().len(), 8);
    }
}
