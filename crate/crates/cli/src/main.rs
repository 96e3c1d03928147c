use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use fwas_core::experiments::{reproduce, selftest, theorem_rate, ExperimentId, ExperimentSpec, SelftestOptions};
use fwas_core::io::{read_atoms, to_json, trace_csv, write_atomic, MeasureJson, ObjectiveSpec};
use fwas_core::measures::{face_distance_table, facial_distance, local_phi_lower_bound_report};
use fwas_core::polytope::SimplexPoint;
use fwas_core::solver::{drop_step_audit, run, verify_linear_rate, RateTheorem, RunConfig, TIE_BREAK_POLICY};
use fwas_core::Error;

#[derive(Parser)]
#[command(name = "fwas", version, about = "Facial distance and Frank-Wolfe with away steps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Facial distance, minimizing face, witnesses and the per-face table.
    Analyze {
        atoms: PathBuf,
        /// Atom indices spanning Z; adds the localized lower bound.
        #[arg(long, value_delimiter = ',')]
        zface: Option<Vec<usize>>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Runs Frank-Wolfe with away steps and writes the trace.
    Solve {
        atoms: PathBuf,
        objective: PathBuf,
        #[arg(long, default_value_t = 0)]
        x0: usize,
        #[arg(long, default_value_t = 1e-12)]
        gap_tol: f64,
        #[arg(long, default_value_t = 10_000)]
        max_iter: usize,
        /// thm4, thm5 or thm6.
        #[arg(long)]
        rate: Option<RateTheorem>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Regenerates ratio-versus-bound data and plots for a named experiment.
    Reproduce {
        id: String,
        #[arg(long = "param", value_name = "K=V")]
        params: Vec<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Runs the invariant suites.
    Selftest {
        #[arg(long)]
        suite: Option<String>,
        /// Negative control: overrides the LP pivot tolerance.
        #[arg(long, hide = true)]
        corrupt_pivot_tol: Option<f64>,
    },
}

/// Exit code for a library error; anything unclassified maps to 1.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Parse(_)) | Some(Error::Io(_)) => 2,
        Some(Error::InstanceTooLarge { .. }) => 3,
        Some(Error::TrivialPolytope) => 4,
        Some(Error::DimensionMismatch { .. }) => 5,
        Some(Error::MuExceedsLipschitz { .. }) => 6,
        _ => 1,
    }
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("FWAS_THREADS") {
        let n: usize = v.parse().with_context(|| format!("FWAS_THREADS='{v}' is not a thread count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    Ok(())
}

fn fmt_vec(v: impl IntoIterator<Item = f64>) -> String {
    let parts: Vec<String> = v.into_iter().map(|x| format!("{x:.12}")).collect();
    format!("({})", parts.join(", "))
}

fn analyze(atoms: &Path, zface: Option<&[usize]>, json_out: Option<&Path>) -> Result<bool> {
    let a = read_atoms(atoms)?;
    let report = facial_distance(&a)?;
    let table = face_distance_table(&a)?;
    let face = report.minimizing_face.as_ref().map(|f| f.atom_indices.clone()).unwrap_or_default();
    println!("atoms: {} in R^{}", a.len(), a.dim());
    println!("Phi(A) = {:.16}", report.value);
    println!("minimizing face: {face:?}");
    println!("witness u (complement) = {}", fmt_vec(report.witness.u.iter().copied()));
    println!("witness v (face)       = {}", fmt_vec(report.witness.v.iter().copied()));
    println!("diameter = {:.16}", a.diameter());
    println!("faces: {}", table.len());
    println!("{:>14}  face", "distance");
    for row in &table {
        println!("{:>14.10}  {:?}", row.distance, row.face.atom_indices);
    }
    let mut local = None;
    if let Some(idx) = zface {
        let z = idx.iter().map(|&i| SimplexPoint::vertex(a.len(), i)).collect::<fwas_core::Result<Vec<_>>>()?;
        let r = local_phi_lower_bound_report(&a, &z)?;
        println!("Phi(A, Z) >= {:.16}  (Z spanned by atoms {idx:?})", r.value);
        local = Some(MeasureJson::from_report("local_phi_lower_bound", &r));
    }
    if let Some(path) = json_out {
        let faces: Vec<_> = table
            .iter()
            .map(|row| json!({ "atoms": row.face.atom_indices, "distance": row.distance }))
            .collect();
        let doc = json!({
            "facial_distance": MeasureJson::from_report("facial_distance", &report),
            "diameter": a.diameter(),
            "faces": faces,
            "local": local,
            "zface": zface,
        });
        write_atomic(path, to_json(&doc)?.as_bytes())?;
    }
    Ok(true)
}

struct SolveArgs<'a> {
    atoms: &'a Path,
    objective: &'a Path,
    x0: usize,
    gap_tol: f64,
    max_iter: usize,
    rate: Option<RateTheorem>,
    out: &'a Path,
}

fn solve(args: SolveArgs) -> Result<bool> {
    let a = read_atoms(args.atoms)?;
    let spec = ObjectiveSpec::read(args.objective)?;
    let obj = spec.build()?;
    if obj.dim() != a.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: obj.dim() }.into());
    }
    let x0 = SimplexPoint::vertex(a.len(), args.x0)?;
    let cfg = RunConfig { gap_tol: args.gap_tol, max_iter: args.max_iter, step_rule: None };
    let trace = run(&a, &obj, &x0, &cfg)?;
    let last = trace.last();
    let audit = drop_step_audit(&trace);
    println!("objective: {}, step rule: {:?}", obj.kind(), trace.step_rule);
    println!("iterations: {}, stop: {:?}", trace.len() - 1, trace.stop);
    println!("f = {:.16e}, fw_gap = {:.3e}", last.f_value, last.fw_gap);
    println!("drop-step audit: {}", if audit.passed { "passed" } else { "failed" });
    write_atomic(&args.out.join("trace.csv"), trace_csv(&trace)?.as_bytes())?;

    let mut ok = audit.passed;
    let mut rate_doc = None;
    if let Some(theorem) = args.rate {
        let tr = theorem_rate(theorem, &a, &obj, &x0)?;
        let check = verify_linear_rate(&trace, tr.bound.r, tr.f_star)?;
        println!(
            "{theorem}: r = {:.6e} (raw {:.6e}), f* >= {:.16e}, rate {}",
            tr.bound.r,
            tr.bound.raw,
            tr.f_star,
            if check.passed { "holds" } else { "violated" }
        );
        if let Some(k) = check.first_violation {
            println!("first violation at k = {k}");
        }
        ok &= check.passed;
        write_atomic(&args.out.join("rate.json"), to_json(&json!({ "theorem": tr, "check": check }))?.as_bytes())?;
        rate_doc = Some(tr.seed);
    }
    let manifest = json!({
        "command": "solve",
        "atoms": args.atoms,
        "objective": spec,
        "x0": args.x0,
        "config": cfg,
        "step_rule": trace.step_rule,
        "stop": trace.stop,
        "iterations": trace.len() - 1,
        "seeds": rate_doc.flatten().into_iter().collect::<Vec<_>>(),
        "rate": args.rate.map(|t| t.to_string()),
        "tie_break_policy": TIE_BREAK_POLICY,
        "version": env!("CARGO_PKG_VERSION"),
        "drop_audit": audit,
    });
    write_atomic(&args.out.join("manifest.json"), to_json(&manifest)?.as_bytes())?;
    Ok(ok)
}

fn reproduce_cmd(id: &str, params: &[String], out: &Path) -> Result<bool> {
    let id: ExperimentId = id.parse().map_err(|_| Error::Parse(format!("unknown experiment id '{id}'")))?;
    let mut spec = ExperimentSpec::new(id, out.join(id.as_str()));
    for p in params {
        spec.set_param(p)?;
    }
    let outcome = reproduce(&spec)?;
    for line in &outcome.lines {
        println!("{line}");
    }
    println!("wrote {} files to {}", outcome.files.len(), spec.out_dir.display());
    Ok(outcome.passed)
}

fn selftest_cmd(suite: Option<String>, corrupt_pivot_tol: Option<f64>) -> Result<bool> {
    let report = selftest(&SelftestOptions { suite, corrupt_pivot_tol });
    for s in &report.suites {
        println!(
            "{} {:<12} {:>5} checks  {:>8.3} s",
            if s.passed { "PASS" } else { "FAIL" },
            s.name,
            s.checks,
            s.seconds
        );
        for f in s.failures.iter().take(10) {
            println!("    {f}");
        }
    }
    Ok(report.passed)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = init_threads().and_then(|_| match cli.command {
        Command::Analyze { atoms, zface, json } => analyze(&atoms, zface.as_deref(), json.as_deref()),
        Command::Solve { atoms, objective, x0, gap_tol, max_iter, rate, out } => solve(SolveArgs {
            atoms: &atoms,
            objective: &objective,
            x0,
            gap_tol,
            max_iter,
            rate,
            out: &out,
        }),
        Command::Reproduce { id, params, out } => reproduce_cmd(&id, &params, &out),
        Command::Selftest { suite, corrupt_pivot_tol } => selftest_cmd(suite, corrupt_pivot_tol),
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
