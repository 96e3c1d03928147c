//! Dense two-phase primal simplex with Bland's rule.
//!
//! The programs solved here have at most a few dozen rows and columns, so the
//! whole tableau is kept dense. After the pivoting phase the final basis is
//! re-solved against the original data with an LU factorisation, which gives
//! primal values and duals accurate to rounding regardless of how much error
//! the tableau accumulated.

use log::debug;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarBound {
    Free,
    NonNegative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coefficients: Vec<f64>,
    pub rhs: f64,
}

/// `min/max <cost, x>` subject to equality rows, `>=` rows and per-variable
/// sign bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub cost: Vec<f64>,
    pub equalities: Vec<Constraint>,
    pub inequalities: Vec<Constraint>,
    pub bounds: Vec<VarBound>,
}

impl LinearProgram {
    /// A program over `cost.len()` nonnegative variables with no constraints.
    pub fn new(sense: Sense, cost: Vec<f64>) -> Self {
        let n = cost.len();
        Self {
            sense,
            cost,
            equalities: Vec::new(),
            inequalities: Vec::new(),
            bounds: vec![VarBound::NonNegative; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn set_free(&mut self, j: usize) -> &mut Self {
        self.bounds[j] = VarBound::Free;
        self
    }

    pub fn add_eq(&mut self, coefficients: Vec<f64>, rhs: f64) -> &mut Self {
        self.equalities.push(Constraint { coefficients, rhs });
        self
    }

    /// `<coefficients, x> >= rhs`.
    pub fn add_ge(&mut self, coefficients: Vec<f64>, rhs: f64) -> &mut Self {
        self.inequalities.push(Constraint { coefficients, rhs });
        self
    }

    /// `<coefficients, x> <= rhs`, stored as the negated `>=` row.
    pub fn add_le(&mut self, coefficients: Vec<f64>, rhs: f64) -> &mut Self {
        let negated = coefficients.into_iter().map(|c| -c).collect();
        self.add_ge(negated, -rhs)
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.bounds.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: self.bounds.len() });
        }
        for row in self.equalities.iter().chain(&self.inequalities) {
            if row.coefficients.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: row.coefficients.len() });
            }
            if !row.rhs.is_finite() || row.coefficients.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidInput("non-finite LP coefficient".into()));
            }
        }
        if self.cost.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite LP cost".into()));
        }
        Ok(())
    }

    /// `max_i |<row_i, x> - rhs_i|` over equalities and `max_i (rhs_i - <row_i, x>)_+`
    /// over inequalities, plus sign violations of nonnegative variables.
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let dot = |c: &[f64]| c.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        let eq = self.equalities.iter().map(|r| (dot(&r.coefficients) - r.rhs).abs());
        let ge = self.inequalities.iter().map(|r| (r.rhs - dot(&r.coefficients)).max(0.0));
        let sign = self
            .bounds
            .iter()
            .zip(x)
            .filter(|(b, _)| **b == VarBound::NonNegative)
            .map(|(_, v)| (-v).max(0.0));
        eq.chain(ge).chain(sign).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of [`solve_lp`].
///
/// Duals follow the convention `objective = <b_eq, eq_duals> + <b_ge, ge_duals>`
/// at optimality; for a minimisation `ge_duals >= 0`, for a maximisation
/// `ge_duals <= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    pub eq_duals: Vec<f64>,
    pub ge_duals: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn dual_objective(&self, lp: &LinearProgram) -> f64 {
        let eq: f64 = lp.equalities.iter().zip(&self.eq_duals).map(|(r, y)| r.rhs * y).sum();
        let ge: f64 = lp.inequalities.iter().zip(&self.ge_duals).map(|(r, y)| r.rhs * y).sum();
        eq + ge
    }

    /// Largest violation of dual feasibility and complementary slackness.
    pub fn complementarity_residual(&self, lp: &LinearProgram) -> f64 {
        let n = lp.num_vars();
        let sign = if lp.sense == Sense::Minimize { 1.0 } else { -1.0 };
        let mut reduced: Vec<f64> = lp.cost.clone();
        for (r, y) in lp.equalities.iter().zip(&self.eq_duals) {
            for j in 0..n {
                reduced[j] -= r.coefficients[j] * y;
            }
        }
        for (r, y) in lp.inequalities.iter().zip(&self.ge_duals) {
            for j in 0..n {
                reduced[j] -= r.coefficients[j] * y;
            }
        }
        let mut worst = 0.0_f64;
        for j in 0..n {
            let d = sign * reduced[j];
            match lp.bounds[j] {
                VarBound::Free => worst = worst.max(d.abs()),
                VarBound::NonNegative => {
                    worst = worst.max((-d).max(0.0));
                    worst = worst.max((d * self.primal[j]).abs());
                }
            }
        }
        let dot = |c: &[f64]| c.iter().zip(&self.primal).map(|(a, b)| a * b).sum::<f64>();
        for (r, y) in lp.inequalities.iter().zip(&self.ge_duals) {
            worst = worst.max((-sign * y).max(0.0));
            worst = worst.max(((dot(&r.coefficients) - r.rhs) * y).abs());
        }
        worst
    }
}

#[derive(Debug, Clone)]
pub struct LpOptions {
    /// Reduced costs and pivot elements below this magnitude count as zero.
    pub pivot_tol: f64,
    /// Phase-one infeasibility above this (relative to `max(1, |b|_inf)`) means infeasible.
    pub feasibility_tol: f64,
    pub max_pivots: usize,
    /// Dump every tableau through `log::debug!`.
    pub dump_tableaus: bool,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self { pivot_tol: 1e-9, feasibility_tol: 1e-9, max_pivots: 50_000, dump_tableaus: false }
    }
}

pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    solve_lp_with(lp, &LpOptions::default())
}

/// How an original variable maps onto standard-form columns.
#[derive(Clone, Copy)]
enum ColumnMap {
    Single(usize),
    Split(usize, usize),
}

struct StandardForm {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: DVector<f64>,
    columns: Vec<ColumnMap>,
    /// Factor applied to each original row (scaling times sign flip).
    row_factor: Vec<f64>,
}

fn to_standard_form(lp: &LinearProgram) -> StandardForm {
    let n = lp.num_vars();
    let mut columns = Vec::with_capacity(n);
    let mut ncols = 0;
    for bound in &lp.bounds {
        match bound {
            VarBound::NonNegative => {
                columns.push(ColumnMap::Single(ncols));
                ncols += 1;
            }
            VarBound::Free => {
                columns.push(ColumnMap::Split(ncols, ncols + 1));
                ncols += 2;
            }
        }
    }
    let n_eq = lp.equalities.len();
    let n_ge = lp.inequalities.len();
    let rows = n_eq + n_ge;
    let total = ncols + n_ge;
    let mut a = DMatrix::zeros(rows, total);
    let mut b = DVector::zeros(rows);
    for (i, row) in lp.equalities.iter().chain(&lp.inequalities).enumerate() {
        for (j, map) in columns.iter().enumerate() {
            let v = row.coefficients[j];
            match *map {
                ColumnMap::Single(c) => a[(i, c)] = v,
                ColumnMap::Split(p, q) => {
                    a[(i, p)] = v;
                    a[(i, q)] = -v;
                }
            }
        }
        if i >= n_eq {
            a[(i, ncols + i - n_eq)] = -1.0;
        }
        b[i] = row.rhs;
    }
    let mut row_factor = vec![1.0; rows];
    for i in 0..rows {
        let scale = a.row(i).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let mut factor = if scale > 0.0 { 1.0 / scale } else { 1.0 };
        if b[i] < 0.0 {
            factor = -factor;
        }
        a.row_mut(i).scale_mut(factor);
        b[i] *= factor;
        row_factor[i] = factor;
    }
    let sign = if lp.sense == Sense::Minimize { 1.0 } else { -1.0 };
    let mut c = DVector::zeros(total);
    for (j, map) in columns.iter().enumerate() {
        match *map {
            ColumnMap::Single(p) => c[p] = sign * lp.cost[j],
            ColumnMap::Split(p, q) => {
                c[p] = sign * lp.cost[j];
                c[q] = -sign * lp.cost[j];
            }
        }
    }
    StandardForm { a, b, c, columns, row_factor }
}

/// Dense tableau `[A | I_art | b]` with one basic column per row.
struct Tableau {
    rows: usize,
    width: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
    active: Vec<bool>,
    pivots: usize,
}

impl Tableau {
    fn new(sf: &StandardForm) -> Self {
        let rows = sf.a.nrows();
        let structural = sf.a.ncols();
        let width = structural + rows + 1;
        let mut data = vec![0.0; rows * width];
        for i in 0..rows {
            for j in 0..structural {
                data[i * width + j] = sf.a[(i, j)];
            }
            data[i * width + structural + i] = 1.0;
            data[i * width + width - 1] = sf.b[i];
        }
        let basis = (0..rows).map(|i| structural + i).collect();
        Self { rows, width, data, basis, active: vec![true; rows], pivots: 0 }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.width - 1)
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let w = self.width;
        let p = self.data[r * w + col];
        for j in 0..w {
            self.data[r * w + j] /= p;
        }
        self.data[r * w + col] = 1.0;
        for i in 0..self.rows {
            if i == r || !self.active[i] {
                continue;
            }
            let f = self.data[i * w + col];
            if f != 0.0 {
                for j in 0..w {
                    self.data[i * w + j] -= f * self.data[r * w + j];
                }
                self.data[i * w + col] = 0.0;
            }
        }
        self.basis[r] = col;
        self.pivots += 1;
    }

    fn reduced_costs(&self, cost: &[f64], ncols: usize) -> Vec<f64> {
        let mut d: Vec<f64> = cost[..ncols].to_vec();
        for i in 0..self.rows {
            if !self.active[i] {
                continue;
            }
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for (j, dj) in d.iter_mut().enumerate() {
                    *dj -= cb * self.at(i, j);
                }
            }
        }
        d
    }

    fn dump(&self, label: &str) {
        debug!("tableau [{label}] basis = {:?}", self.basis);
        for i in 0..self.rows {
            if self.active[i] {
                let row: Vec<String> =
                    (0..self.width).map(|j| format!("{:>10.4}", self.at(i, j))).collect();
                debug!("  {}", row.join(" "));
            }
        }
    }

    /// Runs Bland-rule simplex on `cost` (indexed over all tableau columns)
    /// letting only the first `enter_cols` columns enter. Returns false when
    /// the objective is unbounded below.
    fn optimize(&mut self, cost: &[f64], enter_cols: usize, opts: &LpOptions) -> Result<bool> {
        loop {
            if self.pivots >= opts.max_pivots {
                return Err(Error::NumericalBreakdown(format!(
                    "simplex exceeded {} pivots",
                    opts.max_pivots
                )));
            }
            let d = self.reduced_costs(cost, enter_cols);
            let Some(col) = (0..enter_cols)
                .find(|&j| d[j] < -opts.pivot_tol && !self.basis.contains(&j))
            else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                if !self.active[i] {
                    continue;
                }
                let a = self.at(i, col);
                if a > opts.pivot_tol {
                    let ratio = self.rhs(i).max(0.0) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((r, best)) => {
                            let tie = (ratio - best).abs() <= 1e-12 * (1.0 + best.abs());
                            if ratio < best && !tie || tie && self.basis[i] < self.basis[r] {
                                Some((i, ratio))
                            } else {
                                Some((r, best))
                            }
                        }
                    };
                }
            }
            let Some((row, _)) = leave else {
                return Ok(false);
            };
            self.pivot(row, col);
            if opts.dump_tableaus {
                self.dump("pivot");
            }
        }
    }
}

pub fn solve_lp_with(lp: &LinearProgram, opts: &LpOptions) -> Result<LpSolution> {
    lp.validate()?;
    let sf = to_standard_form(lp);
    let rows = sf.a.nrows();
    let ncols = sf.a.ncols();
    let n = lp.num_vars();

    let mut tab = Tableau::new(&sf);
    if opts.dump_tableaus {
        tab.dump("initial");
    }

    // Phase one: minimise the sum of artificials.
    let mut phase1 = vec![0.0; ncols + rows];
    phase1[ncols..].iter_mut().for_each(|c| *c = 1.0);
    tab.optimize(&phase1, ncols, opts)?;
    let infeasibility: f64 =
        (0..rows).filter(|&i| tab.basis[i] >= ncols).map(|i| tab.rhs(i).max(0.0)).sum();
    let b_scale = sf.b.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    if infeasibility > opts.feasibility_tol * b_scale {
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            primal: vec![0.0; n],
            eq_duals: vec![0.0; lp.equalities.len()],
            ge_duals: vec![0.0; lp.inequalities.len()],
            objective: f64::NAN,
            pivots: tab.pivots,
        });
    }

    // Drive remaining artificials out of the basis; rows where that is
    // impossible are linearly dependent and get dropped.
    for i in 0..rows {
        if tab.basis[i] < ncols {
            continue;
        }
        let best = (0..ncols)
            .filter(|j| !tab.basis.contains(j))
            .map(|j| (j, tab.at(i, j).abs()))
            .fold(None, |acc: Option<(usize, f64)>, (j, v)| match acc {
                Some((_, bv)) if bv >= v => acc,
                _ => Some((j, v)),
            });
        match best {
            Some((j, v)) if v > opts.pivot_tol => tab.pivot(i, j),
            _ => tab.active[i] = false,
        }
    }

    // Phase two on the true cost; artificial columns never re-enter.
    let mut cost = vec![0.0; ncols + rows];
    cost[..ncols].copy_from_slice(sf.c.as_slice());
    if !tab.optimize(&cost, ncols, opts)? {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            primal: vec![0.0; n],
            eq_duals: vec![0.0; lp.equalities.len()],
            ge_duals: vec![0.0; lp.inequalities.len()],
            objective: match lp.sense {
                Sense::Minimize => f64::NEG_INFINITY,
                Sense::Maximize => f64::INFINITY,
            },
            pivots: tab.pivots,
        });
    }
    if opts.dump_tableaus {
        tab.dump("optimal");
    }

    let (x_std, y_std) = refine_basis(&sf, &tab)?;

    let mut primal = vec![0.0; n];
    for (j, map) in sf.columns.iter().enumerate() {
        primal[j] = match *map {
            ColumnMap::Single(p) => x_std[p],
            ColumnMap::Split(p, q) => x_std[p] - x_std[q],
        };
    }
    let sense_sign = if lp.sense == Sense::Minimize { 1.0 } else { -1.0 };
    let duals: Vec<f64> =
        (0..rows).map(|i| sense_sign * y_std[i] * sf.row_factor[i]).collect();
    let objective = lp.cost.iter().zip(&primal).map(|(c, x)| c * x).sum();
    let n_eq = lp.equalities.len();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        primal,
        eq_duals: duals[..n_eq].to_vec(),
        ge_duals: duals[n_eq..].to_vec(),
        objective,
        pivots: tab.pivots,
    })
}

/// Recomputes `x_B = B^{-1} b` and `y = B^{-T} c_B` from the original data.
fn refine_basis(sf: &StandardForm, tab: &Tableau) -> Result<(Vec<f64>, Vec<f64>)> {
    let ncols = sf.a.ncols();
    let rows = sf.a.nrows();
    let active: Vec<usize> = (0..rows).filter(|&i| tab.active[i]).collect();
    let k = active.len();
    let mut x = vec![0.0; ncols];
    let mut y = vec![0.0; rows];
    if k == 0 {
        return Ok((x, y));
    }
    let basis: Vec<usize> = active.iter().map(|&i| tab.basis[i]).collect();
    let bmat = DMatrix::from_fn(k, k, |r, c| sf.a[(active[r], basis[c])]);
    let rhs = DVector::from_iterator(k, active.iter().map(|&i| sf.b[i]));
    let cb = DVector::from_iterator(k, basis.iter().map(|&j| sf.c[j]));
    let lu = bmat.clone().lu();
    let refined = lu.solve(&rhs).zip(bmat.transpose().lu().solve(&cb));
    match refined {
        Some((xb, yb)) if xb.iter().chain(yb.iter()).all(|v| v.is_finite()) => {
            for (c, &j) in basis.iter().enumerate() {
                x[j] = xb[c].max(0.0);
            }
            for (r, &i) in active.iter().enumerate() {
                y[i] = yb[r];
            }
        }
        _ => return Err(Error::NumericalBreakdown("final simplex basis is singular".into())),
    }
    Ok((x, y))
}
