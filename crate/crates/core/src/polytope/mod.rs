//! Atoms, simplex-represented points and faces of `conv(A)`.
//!
//! A polytope is always given by a finite list of atoms (the columns of an
//! `m x n` matrix). Points of the polytope are carried together with their
//! convex weights so that the support `I(x)` is available to the solver and
//! to the condition measures.

mod faces;

pub(crate) use faces::hull_weights;
pub use faces::{
    closure_of_point, closure_of_points, enumerate_proper_faces, enumerate_proper_faces_with_limit, is_vertex_set,
    margin_witness, ClosedFace, DEFAULT_FACE_ENUM_LIMIT,
};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// Weights at or below this value are treated as outside the support.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;

/// Tolerance on `sum(weights) = 1` for a [`SimplexPoint`].
pub const SIMPLEX_SUM_TOL: f64 = 1e-12;

/// The atom set `A`, stored column-wise: column `j` is atom `a_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomMatrix {
    matrix: DMatrix<f64>,
}

impl AtomMatrix {
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.ncols() == 0 {
            return Err(Error::InvalidInput("atom set is empty".into()));
        }
        if matrix.nrows() == 0 {
            return Err(Error::InvalidInput("atoms have dimension zero".into()));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("atom coordinates must be finite".into()));
        }
        Ok(Self { matrix })
    }

    /// Builds the matrix from a list of atoms, each a vector in `R^m`.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let m = columns.first().map(Vec::len).unwrap_or(0);
        for c in columns {
            if c.len() != m {
                return Err(Error::DimensionMismatch { expected: m, found: c.len() });
            }
        }
        let matrix = DMatrix::from_fn(m, columns.len(), |i, j| columns[j][i]);
        Self::from_matrix(matrix)
    }

    /// Builds the matrix from its rows (the layout used when writing `A` by hand).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.first().map(Vec::len).unwrap_or(0);
        for r in rows {
            if r.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: r.len() });
            }
        }
        let matrix = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
        Self::from_matrix(matrix)
    }

    /// Ambient dimension `m`.
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Number of atoms `n`.
    pub fn len(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.ncols() == 0
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn atom(&self, j: usize) -> DVector<f64> {
        self.matrix.column(j).into_owned()
    }

    pub fn atoms(&self) -> Vec<DVector<f64>> {
        (0..self.len()).map(|j| self.atom(j)).collect()
    }

    /// Atoms restricted to the given indices, in the given order.
    pub fn select(&self, indices: &[usize]) -> Vec<DVector<f64>> {
        indices.iter().map(|&j| self.atom(j)).collect()
    }

    /// True iff some pair of atoms differs.
    pub fn has_two_distinct_columns(&self) -> bool {
        let first = self.matrix.column(0);
        (1..self.len()).any(|j| self.matrix.column(j) != first)
    }

    /// `u = A x`.
    pub fn combine(&self, x: &SimplexPoint) -> Result<DVector<f64>> {
        if x.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: x.len() });
        }
        Ok(self.combine_weights(x.weights()))
    }

    /// `A w` for an arbitrary weight vector of length `n`.
    pub(crate) fn combine_weights(&self, weights: &[f64]) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        for (j, &w) in weights.iter().enumerate() {
            if w != 0.0 {
                out.axpy(w, &self.matrix.column(j), 1.0);
            }
        }
        out
    }

    /// Largest pairwise Euclidean distance between atoms.
    pub fn diameter(&self) -> f64 {
        let n = self.len();
        let mut best = 0.0_f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = (self.matrix.column(i) - self.matrix.column(j)).norm();
                best = best.max(d);
            }
        }
        best
    }

    /// The atom set `T A` for a linear map `T` with `dim()` columns.
    pub fn transform(&self, t: &DMatrix<f64>) -> Result<Self> {
        if t.ncols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: t.ncols() });
        }
        Self::from_matrix(t * &self.matrix)
    }

    /// Appends one row (a linear functional evaluated on every atom).
    pub fn with_row(&self, row: &[f64]) -> Result<Self> {
        if row.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: row.len() });
        }
        let (m, n) = self.matrix.shape();
        let matrix =
            DMatrix::from_fn(m + 1, n, |i, j| if i < m { self.matrix[(i, j)] } else { row[j] });
        Self::from_matrix(matrix)
    }

    /// The first `rows` rows.
    pub fn top_rows(&self, rows: usize) -> Result<Self> {
        if rows == 0 || rows > self.dim() {
            return Err(Error::InvalidInput(format!(
                "cannot take {rows} rows of a {}-row matrix",
                self.dim()
            )));
        }
        Self::from_matrix(self.matrix.rows(0, rows).into_owned())
    }
}

/// A point of the standard simplex `Δ_{n-1}` with its support `I(x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplexPoint {
    weights: Vec<f64>,
    support: Vec<usize>,
}

impl SimplexPoint {
    /// Validates nonnegativity and `sum = 1` (tolerance [`SIMPLEX_SUM_TOL`]).
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidInput("simplex point has no coordinates".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidInput("simplex weights must be finite and nonnegative".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_SUM_TOL {
            return Err(Error::InvalidInput(format!("simplex weights sum to {sum}, not 1")));
        }
        Ok(Self::from_valid(weights))
    }

    /// Clips tiny negatives, zeroes weights at or below the support threshold
    /// and rescales to sum one. Used for weights produced by LP and
    /// min-norm-point solves, which are only feasible up to rounding.
    pub fn from_approximate(mut weights: Vec<f64>) -> Result<Self> {
        for w in weights.iter_mut() {
            if !w.is_finite() {
                return Err(Error::NumericalBreakdown("non-finite simplex weight".into()));
            }
            if *w <= SUPPORT_THRESHOLD {
                *w = 0.0;
            }
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::NumericalBreakdown("simplex weights vanish".into()));
        }
        weights.iter_mut().for_each(|w| *w /= sum);
        Ok(Self::from_valid(weights))
    }

    fn from_valid(weights: Vec<f64>) -> Self {
        let support = weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > SUPPORT_THRESHOLD)
            .map(|(i, _)| i)
            .collect();
        Self { weights, support }
    }

    /// The vertex `e_i` of `Δ_{n-1}`.
    pub fn vertex(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(Error::InvalidInput(format!("vertex index {i} out of range for n = {n}")));
        }
        let mut w = vec![0.0; n];
        w[i] = 1.0;
        Ok(Self::from_valid(w))
    }

    /// Uniform weights on `indices`.
    pub fn uniform_on(n: usize, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() || indices.iter().any(|&i| i >= n) {
            return Err(Error::InvalidInput("invalid index set for uniform simplex point".into()));
        }
        let mut w = vec![0.0; n];
        let share = 1.0 / indices.len() as f64;
        for &i in indices {
            w[i] = share;
        }
        Ok(Self::from_valid(w))
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `I(x)`, sorted ascending.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// The vertex index when `x = e_i`.
    pub fn as_vertex(&self) -> Option<usize> {
        match self.support.as_slice() {
            [i] if self.weights[*i] == 1.0 => Some(*i),
            _ => None,
        }
    }
}

/// `I(x)` for a simplex point.
pub fn support(x: &SimplexPoint) -> Vec<usize> {
    x.support().to_vec()
}

/// An exposed face of `conv(A)` given by its atom set and a supporting
/// functional: `<p, a_i> = c` on the face and `> c` off it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FaceDescriptor {
    pub atom_indices: Vec<usize>,
    pub functional: Vec<f64>,
    pub offset: f64,
}

impl FaceDescriptor {
    pub fn contains_atom(&self, i: usize) -> bool {
        self.atom_indices.binary_search(&i).is_ok()
    }

    /// Indices of atoms not on the face.
    pub fn complement(&self, n: usize) -> Vec<usize> {
        (0..n).filter(|i| !self.contains_atom(*i)).collect()
    }
}

/// Two points `u = A w`, `v = A y` realising a distance or a longest segment.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessPair {
    pub u: DVector<f64>,
    pub v: DVector<f64>,
    pub w: SimplexPoint,
    pub y: SimplexPoint,
}

impl WitnessPair {
    pub fn distance(&self) -> f64 {
        (&self.u - &self.v).norm()
    }

    /// Max of `||A w - u||` and `||A y - v||`.
    pub fn residual(&self, a: &AtomMatrix) -> f64 {
        let ru = (a.combine_weights(self.w.weights()) - &self.u).norm();
        let rv = (a.combine_weights(self.y.weights()) - &self.v).norm();
        ru.max(rv)
    }
}
