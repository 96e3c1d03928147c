//! Objectives over `conv(A)`: convex quadratics, composites `h(Eu) + <b,u>`
//! and generic smooth functions given by callbacks.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenvalues above `-PSD_TOL` are accepted and clipped to zero.
pub const PSD_TOL: f64 = 1e-10;
/// Largest allowed `|Q - Q^T|` entry.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// A differentiable function with value and gradient callbacks.
pub trait SmoothFunction: Send + Sync {
    fn value(&self, v: &DVector<f64>) -> f64;
    fn gradient(&self, v: &DVector<f64>) -> DVector<f64>;
    fn name(&self) -> &str {
        "custom"
    }
}

/// `h(v) = |v|^2 / 2`, strongly convex with `μ = L = 1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct HalfSquaredNorm;

impl SmoothFunction for HalfSquaredNorm {
    fn value(&self, v: &DVector<f64>) -> f64 {
        0.5 * v.norm_squared()
    }

    fn gradient(&self, v: &DVector<f64>) -> DVector<f64> {
        v.clone()
    }

    fn name(&self) -> &str {
        "half-squared-norm"
    }
}

/// Looks up a builtin `h` by name.
pub fn builtin_function(name: &str) -> Option<Arc<dyn SmoothFunction>> {
    match name {
        "half-squared-norm" => Some(Arc::new(HalfSquaredNorm)),
        _ => None,
    }
}

#[derive(Clone)]
pub enum Objective {
    /// `f(u) = <u, Qu>/2 + <b, u>`.
    Quadratic { q: DMatrix<f64>, b: DVector<f64> },
    /// `f(u) = h(Eu) + <b, u>` with `h` μ-strongly convex and `∇h` L-Lipschitz.
    Composite { e: DMatrix<f64>, b: DVector<f64>, h: Arc<dyn SmoothFunction>, mu: f64, lipschitz: f64 },
    /// Any smooth convex `f` with an `L`-Lipschitz gradient.
    GenericSmooth { f: Arc<dyn SmoothFunction>, dim: usize, lipschitz: f64, mu: Option<f64> },
}

impl fmt::Debug for Objective {
    fn fmt(&self, fmt: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Objective::Quadratic { q, b } => fmt.debug_struct("Quadratic").field("q", q).field("b", b).finish(),
            Objective::Composite { e, b, h, mu, lipschitz } => fmt
                .debug_struct("Composite")
                .field("e", e)
                .field("b", b)
                .field("h", &h.name())
                .field("mu", mu)
                .field("lipschitz", lipschitz)
                .finish(),
            Objective::GenericSmooth { f, dim, lipschitz, mu } => fmt
                .debug_struct("GenericSmooth")
                .field("f", &f.name())
                .field("dim", dim)
                .field("lipschitz", lipschitz)
                .field("mu", mu)
                .finish(),
        }
    }
}

fn check_constant(name: &str, value: f64) -> Result<()> {
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::InvalidInput(format!("{name} must be positive, got {value}")));
    }
    Ok(())
}

/// Symmetric eigendecomposition of a PSD matrix with small negative
/// eigenvalues clipped to zero.
fn psd_eigen(q: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    if !q.is_square() {
        return Err(Error::DimensionMismatch { expected: q.nrows(), found: q.ncols() });
    }
    if q.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("Q has non-finite entries".into()));
    }
    if (q - q.transpose()).abs().max() > SYMMETRY_TOL {
        return Err(Error::InvalidInput("Q is not symmetric".into()));
    }
    let mut eig = SymmetricEigen::new(0.5 * (q + q.transpose()));
    for lambda in eig.eigenvalues.iter_mut() {
        if *lambda < -PSD_TOL {
            return Err(Error::InvalidInput(format!("Q has negative eigenvalue {lambda}")));
        }
        if *lambda < PSD_TOL {
            *lambda = 0.0;
        }
    }
    Ok(eig)
}

/// `Q^{1/2}` for a symmetric PSD `Q`.
pub fn psd_sqrt(q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = psd_eigen(q)?;
    let root = eig.eigenvalues.map(f64::sqrt);
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&root) * eig.eigenvectors.transpose())
}

/// `(λ_min, λ_max)` of a symmetric PSD `Q` after clipping.
pub fn eigen_extremes(q: &DMatrix<f64>) -> Result<(f64, f64)> {
    let eig = psd_eigen(q)?;
    let lo = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    Ok((lo, hi))
}

impl Objective {
    pub fn quadratic(q: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        psd_eigen(&q)?;
        if b.len() != q.nrows() {
            return Err(Error::DimensionMismatch { expected: q.nrows(), found: b.len() });
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("b has non-finite entries".into()));
        }
        Ok(Objective::Quadratic { q, b })
    }

    pub fn composite(
        e: DMatrix<f64>,
        b: DVector<f64>,
        h: Arc<dyn SmoothFunction>,
        mu: f64,
        lipschitz: f64,
    ) -> Result<Self> {
        check_constant("mu", mu)?;
        check_constant("L", lipschitz)?;
        if mu > lipschitz {
            return Err(Error::MuExceedsLipschitz { mu, lipschitz });
        }
        if b.len() != e.ncols() {
            return Err(Error::DimensionMismatch { expected: e.ncols(), found: b.len() });
        }
        if e.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("E or b has non-finite entries".into()));
        }
        Ok(Objective::Composite { e, b, h, mu, lipschitz })
    }

    pub fn generic(f: Arc<dyn SmoothFunction>, dim: usize, lipschitz: f64, mu: Option<f64>) -> Result<Self> {
        check_constant("L", lipschitz)?;
        if let Some(mu) = mu {
            check_constant("mu", mu)?;
            if mu > lipschitz {
                return Err(Error::MuExceedsLipschitz { mu, lipschitz });
            }
        }
        Ok(Objective::GenericSmooth { f, dim, lipschitz, mu })
    }

    /// Dimension `m` of the space containing `conv(A)`.
    pub fn dim(&self) -> usize {
        match self {
            Objective::Quadratic { q, .. } => q.nrows(),
            Objective::Composite { e, .. } => e.ncols(),
            Objective::GenericSmooth { dim, .. } => *dim,
        }
    }

    pub fn value(&self, u: &DVector<f64>) -> f64 {
        match self {
            Objective::Quadratic { q, b } => 0.5 * u.dot(&(q * u)) + b.dot(u),
            Objective::Composite { e, b, h, .. } => h.value(&(e * u)) + b.dot(u),
            Objective::GenericSmooth { f, .. } => f.value(u),
        }
    }

    pub fn gradient(&self, u: &DVector<f64>) -> DVector<f64> {
        match self {
            Objective::Quadratic { q, b } => q * u + b,
            Objective::Composite { e, b, h, .. } => e.transpose() * h.gradient(&(e * u)) + b,
            Objective::GenericSmooth { f, .. } => f.gradient(u),
        }
    }

    /// Lipschitz constant of `∇f`: `λ_max(Q)`, `L |E|_2^2`, or the supplied `L`.
    pub fn gradient_lipschitz(&self) -> Result<f64> {
        match self {
            Objective::Quadratic { q, .. } => Ok(eigen_extremes(q)?.1),
            Objective::Composite { e, lipschitz, .. } => {
                let s = e.singular_values().iter().copied().fold(0.0, f64::max);
                Ok(lipschitz * s * s)
            }
            Objective::GenericSmooth { lipschitz, .. } => Ok(*lipschitz),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Objective::Quadratic { .. } => "quadratic",
            Objective::Composite { .. } => "composite",
            Objective::GenericSmooth { .. } => "generic",
        }
    }
}
