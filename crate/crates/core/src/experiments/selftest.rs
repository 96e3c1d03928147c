//! Invariant suites run by `fwas selftest`.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::instances::*;
use super::reproduce::hat_ratio;
use crate::error::Result;
use crate::kernel::{solve_lp_with, LinearProgram, LpOptions, Sense};
use crate::measures::{
    bar_phi_bounds, bar_phi_pair, facial_distance, local_phi_lower_bound, pdirw, phi_pair, phi_pair_dual,
    scaled_instance,
};
use crate::polytope::{enumerate_proper_faces, AtomMatrix, SimplexPoint};
use crate::solver::{
    certified_optimum, drop_step_audit, eigen_extremes, rate_bound_generic, run, verify_linear_rate, Objective,
    RunConfig, StepRule,
};

pub const SUITES: [&str; 7] = ["lp-duality", "faces", "theorem1", "theorem2", "theorem3", "prop7", "drop-audit"];

const SEED: u64 = 0x5eed_f0a5;

#[derive(Debug, Clone, Default)]
pub struct SelftestOptions {
    /// Run only this suite.
    pub suite: Option<String>,
    /// Negative control: overrides the LP pivot tolerance in the duality suite.
    pub corrupt_pivot_tol: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub checks: usize,
    pub failures: Vec<String>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestReport {
    pub passed: bool,
    pub suites: Vec<SuiteResult>,
}

struct Checker {
    checks: usize,
    failures: Vec<String>,
}

impl Checker {
    fn new() -> Self {
        Self { checks: 0, failures: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    /// Records an error as a failed check and yields the value otherwise.
    fn ok<T>(&mut self, r: Result<T>, what: &str) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.checks += 1;
                self.failures.push(format!("{what}: {e}"));
                None
            }
        }
    }
}

/// Atoms with coordinates uniform in `[-1, 1]`.
pub fn random_atoms(rng: &mut ChaCha8Rng, m: usize, n: usize) -> AtomMatrix {
    let columns: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    AtomMatrix::from_columns(&columns).expect("random atoms are finite")
}

/// A random point of the simplex with random support.
pub fn random_simplex_point(rng: &mut ChaCha8Rng, n: usize) -> SimplexPoint {
    let mut w: Vec<f64> = (0..n)
        .map(|_| if rng.gen_bool(0.7) { -rng.gen_range(f64::MIN_POSITIVE..1.0f64).ln() } else { 0.0 })
        .collect();
    if w.iter().all(|v| *v == 0.0) {
        w[rng.gen_range(0..n)] = 1.0;
    }
    SimplexPoint::from_approximate(w).expect("nonempty support")
}

fn suite_lp_duality(opts: &SelftestOptions) -> Checker {
    let mut c = Checker::new();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let lp_opts = LpOptions { pivot_tol: opts.corrupt_pivot_tol.unwrap_or(LpOptions::default().pivot_tol), ..LpOptions::default() };
    for trial in 0..100 {
        let n = rng.gen_range(2..=6);
        let rows = rng.gen_range(2..=5);
        let cost: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
        let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
        let mut lp = LinearProgram::new(Sense::Minimize, cost);
        for _ in 0..rows {
            let row: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..2.0)).collect();
            let rhs = row.iter().zip(&x0).map(|(a, b)| a * b).sum::<f64>() - rng.gen_range(0.0..0.5);
            lp.add_ge(row, rhs);
        }
        let Some(sol) = c.ok(solve_lp_with(&lp, &lp_opts), &format!("lp {trial}")) else { continue };
        let scale = sol.objective.abs().max(1.0);
        c.check(sol.is_optimal(), || format!("lp {trial}: status {:?}", sol.status));
        c.check(lp.primal_residual(&sol.primal) <= 1e-8, || format!("lp {trial}: primal residual"));
        let gap = (sol.objective - sol.dual_objective(&lp)).abs();
        c.check(gap <= 1e-7 * scale, || format!("lp {trial}: duality gap {gap:.3e}"));
        let comp = sol.complementarity_residual(&lp);
        c.check(comp <= 1e-7 * scale, || format!("lp {trial}: complementarity residual {comp:.3e}"));
    }
    for trial in 0..100 {
        let m = rng.gen_range(1..=4);
        let n = rng.gen_range(2..=6);
        let a = random_atoms(&mut rng, m, n);
        let x = random_simplex_point(&mut rng, n);
        let z = random_simplex_point(&mut rng, n);
        let diff = a.combine(&x).unwrap() - a.combine(&z).unwrap();
        if diff.norm() < 1e-6 {
            continue;
        }
        let Some(p) = c.ok(phi_pair(&a, &x, &z), &format!("pair {trial}")) else { continue };
        let Some(d) = c.ok(phi_pair_dual(&a, &x, &z), &format!("pair dual {trial}")) else { continue };
        c.check((p.value - d).abs() <= 1e-7, || format!("pair {trial}: primal {} dual {}", p.value, d));
        c.check((p.value - p.witness.distance()).abs() <= 1e-7, || format!("pair {trial}: witness distance"));
    }
    c
}

fn suite_faces() -> Checker {
    let mut c = Checker::new();
    for m in 2..=4 {
        if let Some(faces) = c.ok(enumerate_proper_faces(&cube(m).unwrap()), "cube faces") {
            let expected = 3usize.pow(m as u32) - 1;
            c.check(faces.len() == expected, || format!("cube m={m}: {} faces, expected {expected}", faces.len()));
        }
    }
    for m in 2..=6 {
        let a = simplex(m).unwrap();
        if let Some(faces) = c.ok(enumerate_proper_faces(&a), "simplex faces") {
            let expected = (1usize << m) - 2;
            c.check(faces.len() == expected, || format!("simplex m={m}: {} faces, expected {expected}", faces.len()));
            for f in &faces {
                let ok = (0..a.len()).all(|j| {
                    let val: f64 = a.atom(j).iter().zip(&f.functional).map(|(x, y)| x * y).sum();
                    if f.contains_atom(j) {
                        (val - f.offset).abs() <= 1e-9
                    } else {
                        val > f.offset + 1e-9
                    }
                });
                c.check(ok, || format!("simplex m={m}: functional does not expose {:?}", f.atom_indices));
            }
        }
    }
    // A triangle with an interior atom: the interior atom lies on no proper face.
    let a = AtomMatrix::from_columns(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![0.2, 0.2]]).unwrap();
    if let Some(faces) = c.ok(enumerate_proper_faces(&a), "triangle faces") {
        c.check(faces.len() == 6, || format!("triangle: {} faces", faces.len()));
        c.check(faces.iter().all(|f| !f.contains_atom(3)), || "interior atom on a proper face".into());
    }
    c
}

fn suite_theorem1() -> Checker {
    let mut c = Checker::new();
    for m in 2..=3 {
        if let Some(r) = c.ok(facial_distance(&cube(m).unwrap()), "cube") {
            c.check((r.value - cube_phi(m)).abs() <= PHI_CHECK_TOL, || format!("cube m={m}: {}", r.value));
        }
    }
    for m in 2..=6 {
        if let Some(r) = c.ok(facial_distance(&simplex(m).unwrap()), "simplex") {
            c.check((r.value - simplex_phi(m)).abs() <= PHI_CHECK_TOL, || format!("simplex m={m}: {}", r.value));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    for trial in 0..30 {
        let m = rng.gen_range(1..=3);
        let n = rng.gen_range(2..=7);
        let a = random_atoms(&mut rng, m, n);
        let Some(r) = c.ok(facial_distance(&a), &format!("polytope {trial}")) else { continue };
        if let Some(p) = c.ok(phi_pair(&a, &r.witness.w, &r.witness.y), "witness pair") {
            c.check((p.value - r.value).abs() <= 1e-7, || format!("polytope {trial}: witness gives {} vs {}", p.value, r.value));
        }
        for _ in 0..10 {
            let x = random_simplex_point(&mut rng, n);
            let z = random_simplex_point(&mut rng, n);
            if (a.combine(&x).unwrap() - a.combine(&z).unwrap()).norm() < 1e-6 {
                continue;
            }
            if let Some(p) = c.ok(phi_pair(&a, &x, &z), "pair") {
                c.check(p.value >= r.value - 1e-7, || format!("polytope {trial}: pair {} below Φ {}", p.value, r.value));
            }
        }
    }
    c
}

const PHI_CHECK_TOL: f64 = 1e-8;

fn suite_theorem2() -> Checker {
    let mut c = Checker::new();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    for trial in 0..30 {
        let m = rng.gen_range(1..=3);
        let n = rng.gen_range(2..=8);
        let a = random_atoms(&mut rng, m, n);
        let Some(r) = c.ok(facial_distance(&a), &format!("polytope {trial}")) else { continue };
        for _ in 0..20 {
            let u = a.combine(&random_simplex_point(&mut rng, n)).unwrap();
            let v = a.combine(&random_simplex_point(&mut rng, n)).unwrap();
            if (&v - &u).norm() < 1e-6 {
                continue;
            }
            if let Some(w) = c.ok(pdirw(&a, &(&v - &u), &u), "pdirw") {
                c.check(w >= r.value - 1e-7, || format!("polytope {trial}: pdirw {w} below Φ {}", r.value));
            }
        }
        let (u, v) = (&r.witness.u, &r.witness.v);
        if let Some(w) = c.ok(pdirw(&a, &(v - u), u), "pdirw at witness") {
            c.check((w - r.value).abs() <= 1e-6, || format!("polytope {trial}: pdirw {w} at witness vs Φ {}", r.value));
        }
    }
    c
}

fn suite_theorem3() -> Checker {
    let mut c = Checker::new();
    let a = m_example(100.0, 5).unwrap();
    if let Some(lb) = c.ok(local_phi_lower_bound(&a, &[SimplexPoint::vertex(5, 0).unwrap()]), "M-example") {
        c.check(lb >= 100.0, || format!("M-example local bound {lb} < 100"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    for trial in 0..30 {
        let m = rng.gen_range(1..=3);
        let n = rng.gen_range(2..=7);
        let a = random_atoms(&mut rng, m, n);
        let Some(phi) = c.ok(facial_distance(&a), "Φ") else { continue };
        let z = random_simplex_point(&mut rng, n);
        let Some(lb) = c.ok(local_phi_lower_bound(&a, std::slice::from_ref(&z)), "local bound") else { continue };
        c.check(lb >= phi.value - 1e-9, || format!("polytope {trial}: local bound {lb} below Φ {}", phi.value));
        for _ in 0..10 {
            let x = random_simplex_point(&mut rng, n);
            if (a.combine(&x).unwrap() - a.combine(&z).unwrap()).norm() < 1e-6 {
                continue;
            }
            if let Some(p) = c.ok(phi_pair(&a, &x, &z), "pair") {
                c.check(p.value >= lb - 1e-7, || format!("polytope {trial}: pair {} below local bound {lb}", p.value));
            }
        }
        let all: Vec<SimplexPoint> = (0..n).map(|j| SimplexPoint::vertex(n, j).unwrap()).collect();
        if let Some(full) = c.ok(local_phi_lower_bound(&a, &all), "full Z") {
            c.check((full - phi.value).abs() <= 1e-9, || format!("polytope {trial}: full-Z bound {full} vs Φ {}", phi.value));
        }
    }
    c
}

fn suite_prop7() -> Checker {
    let mut c = Checker::new();
    for t in [1.0, 1.0 / 16.0] {
        let inst = scaled_instance(&example_two_abar(t).unwrap(), &DVector::zeros(2)).unwrap();
        if let Some(b) = c.ok(bar_phi_bounds(&inst, 200, SEED), "bounds") {
            let exact = example_two_bar_phi(t);
            c.check(b.lower <= exact + 1e-9 && exact <= b.upper + 1e-9, || {
                format!("t={t}: [{}, {}] misses {exact}", b.lower, b.upper)
            });
        }
    }
    if let Some(h) = c.ok(hat_ratio(1000.0), "hat ratio") {
        c.check(h.passed, || format!("hat ratio at t=1000: {h:?}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    for trial in 0..30 {
        let m = rng.gen_range(1..=2);
        let n = rng.gen_range(2..=6);
        let abar = random_atoms(&mut rng, m + 1, n);
        let g = DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0));
        let inst = scaled_instance(&abar, &g).unwrap();
        let Some(hat) = c.ok(inst.hat(), "hat") else { continue };
        let z = SimplexPoint::uniform_on(n, &inst.zg_face).unwrap();
        for _ in 0..10 {
            let x = random_simplex_point(&mut rng, n);
            if (abar.combine(&x).unwrap() - abar.combine(&z).unwrap()).norm() < 1e-6 {
                continue;
            }
            let Some(bar) = c.ok(bar_phi_pair(&inst, &x, &z), "bar pair") else { continue };
            let lower = match &hat {
                Some(h) => phi_pair(h, &x, &z),
                None => phi_pair(&inst.top().unwrap(), &x, &z),
            };
            match lower {
                Ok(l) => c.check(bar.value >= l.value - 1e-7, || format!("trial {trial}: Φ̄ {} below {}", bar.value, l.value)),
                // Zero direction in the hat space: Φ̄ has nothing to dominate.
                Err(crate::Error::ZeroDirection) => {}
                Err(e) => c.check(false, || format!("trial {trial}: {e}")),
            }
        }
    }
    c
}

#[derive(Debug, Clone, Serialize)]
pub struct Theorem4Trial {
    pub m: usize,
    pub n: usize,
    pub mu: f64,
    pub lipschitz: f64,
    pub c: f64,
    pub diam: f64,
    pub r: f64,
    pub f_star: f64,
    pub iterations: usize,
    pub rate_passed: bool,
    pub audit_passed: bool,
    pub worst_margin: f64,
}

/// A random strongly convex quadratic over a random polytope, run with the
/// Lipschitz step rule; checks the linear rate with
/// `c = local_phi_lower_bound(A, {x*})/2 <= Φ(A, Z*)/2` and the drop-step audit.
pub fn theorem4_trial(rng: &mut ChaCha8Rng) -> Result<Theorem4Trial> {
    let m = rng.gen_range(1..=3);
    let n = rng.gen_range(2..=8);
    let mut a = random_atoms(rng, m, n);
    while !a.has_two_distinct_columns() {
        a = random_atoms(rng, m, n);
    }
    let g = DMatrix::from_fn(m, m, |_, _| rng.gen_range(-1.0..1.0));
    let q = g.transpose() * &g + DMatrix::identity(m, m) * rng.gen_range(0.1..1.0);
    let b = DVector::from_fn(m, |_, _| rng.gen_range(-2.0..2.0));
    let obj = Objective::quadratic(q.clone(), b)?;
    let (mu, lipschitz) = eigen_extremes(&q)?;
    let x0 = SimplexPoint::vertex(n, 0)?;
    let (f_star, x_star) = certified_optimum(&a, &obj, &x0, 1e-14, 100_000)?;
    let c = local_phi_lower_bound(&a, &[x_star])? / 2.0;
    let diam = a.diameter();
    let bound = rate_bound_generic(mu, lipschitz, c, diam)?;
    let cfg = RunConfig { step_rule: Some(StepRule::Lipschitz { lipschitz }), ..RunConfig::default() };
    let trace = run(&a, &obj, &x0, &cfg)?;
    let check = verify_linear_rate(&trace, bound.r, f_star)?;
    let audit = drop_step_audit(&trace);
    Ok(Theorem4Trial {
        m,
        n,
        mu,
        lipschitz,
        c,
        diam,
        r: bound.r,
        f_star,
        iterations: trace.len() - 1,
        rate_passed: check.passed,
        audit_passed: audit.passed,
        worst_margin: check.worst_margin,
    })
}

fn suite_drop_audit() -> Checker {
    let mut c = Checker::new();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    for trial in 0..30 {
        let Some(t) = c.ok(theorem4_trial(&mut rng), &format!("quadratic {trial}")) else { continue };
        c.check(t.rate_passed, || format!("quadratic {trial}: rate violated, worst margin {:.3e}", t.worst_margin));
        c.check(t.audit_passed, || format!("quadratic {trial}: drop-step audit failed"));
    }
    for theta in [std::f64::consts::PI / 10.0, std::f64::consts::PI / 100.0] {
        let (a, obj) = example_one(theta).unwrap();
        if let Some(trace) = c.ok(run(&a, &obj, &SimplexPoint::vertex(3, 0).unwrap(), &RunConfig::default()), "example one") {
            let audit = drop_step_audit(&trace);
            c.check(audit.passed, || format!("θ={theta}: {:?}", audit.violations));
        }
    }
    c
}

/// Runs the selected suites. Unknown suite names yield a failing entry.
pub fn selftest(opts: &SelftestOptions) -> SelftestReport {
    let selected: Vec<&str> = match &opts.suite {
        Some(s) => vec![s.as_str()],
        None => SUITES.to_vec(),
    };
    let mut suites = Vec::new();
    for name in selected {
        let start = Instant::now();
        let c = match name {
            "lp-duality" => suite_lp_duality(opts),
            "faces" => suite_faces(),
            "theorem1" => suite_theorem1(),
            "theorem2" => suite_theorem2(),
            "theorem3" => suite_theorem3(),
            "prop7" => suite_prop7(),
            "drop-audit" => suite_drop_audit(),
            other => Checker { checks: 0, failures: vec![format!("unknown suite '{other}'")] },
        };
        suites.push(SuiteResult {
            name: name.to_string(),
            passed: c.failures.is_empty(),
            checks: c.checks,
            failures: c.failures,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    SelftestReport { passed: suites.iter().all(|s| s.passed), suites }
}
