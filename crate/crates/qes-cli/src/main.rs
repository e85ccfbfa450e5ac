//! Command-line front end: load problem documents or presets, run
//! solve/verify/sweep, and emit machine-readable reports.
//!
//! Exit codes: 0 success, 1 verification failure, 2 input error,
//! 3 solver exhaustion.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qes::catalog;
use qes::error::Error as QesError;
use qes::model::ProblemSpec;
use qes::oracle::{self, Grid, OracleOptions, Stencil};
use qes::report::{SolveReport, ToleranceBlock, VerifyReport, SCHEMA_VERSION};
use qes::solver::{solve, solve_levels, SolutionRecord, SolveOptions};

#[derive(Parser)]
#[command(
    name = "qes",
    version,
    about = "Analytic eigenpairs of quasi-exactly solvable Schrödinger problems",
    after_help = "Exit codes: 0 success, 1 verification failure, 2 input error, 3 solver exhaustion."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve a problem document or preset and write a JSON report.
    Solve(SolveArgs),
    /// Re-verify the records of an existing report against the
    /// differential equation.
    Verify(VerifyArgs),
    /// Sweep one preset parameter and write a CSV of records.
    ///
    /// CSV columns: param, value, record, order, energy, lambda, glog,
    /// bounded, fitted (semicolon-joined key=value), oracle_residual.
    Sweep(SweepArgs),
    /// List bundled presets with provenance.
    Catalog {
        /// Show one preset in detail.
        name: Option<String>,
    },
}

#[derive(Args, Clone)]
struct InputArgs {
    /// Bundled preset name (see `qes catalog`).
    #[arg(long, conflicts_with = "input")]
    preset: Option<String>,
    /// Preset parameter, repeatable: --param k=0.5
    #[arg(long = "param", value_parser = parse_kv)]
    params: Vec<(String, f64)>,
    /// Problem document (JSON) instead of a preset.
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct CommonSolveArgs {
    /// Solve orders 0..=N and merge (defaults to the preset's level
    /// count, or the document's declared order).
    #[arg(long = "max-n")]
    max_n: Option<u32>,
    /// Solve exactly this order instead of accumulating.
    #[arg(long = "only-n", conflicts_with = "max_n")]
    only_n: Option<u32>,
    /// Seed for the multi-start iteration fallback.
    #[arg(long, default_value_t = 20_240_601)]
    seed: u64,
    /// Force the assembly path.
    #[arg(long, value_parser = ["simple", "general"])]
    mode: Option<String>,
    /// Keep unbounded branches in the report (default filters them out).
    #[arg(long)]
    all_branches: bool,
    /// Scaled residual tolerance on system rows.
    #[arg(long, default_value_t = 1e-10)]
    tol_abs: f64,
    /// Duplicate-record tolerance.
    #[arg(long, default_value_t = 1e-9)]
    dedup_tol: f64,
    /// Oracle PASS threshold on the relative grid residual.
    #[arg(long, default_value_t = 1e-7)]
    oracle_tol: f64,
    /// Verification grid points.
    #[arg(long, default_value_t = 480)]
    grid_n: usize,
    /// Verification grid truncation length (defaults per preset).
    #[arg(long)]
    grid_length: Option<f64>,
    /// Use the higher-order stencil in the finite-difference cross-check.
    #[arg(long)]
    numerov: bool,
    /// Random starts in the iteration fallback.
    #[arg(long, default_value_t = 64)]
    multistart: usize,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    common: CommonSolveArgs,
    /// Report output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Succeed even when no record passes.
    #[arg(long)]
    allow_empty: bool,
    /// Write the assembled rows (stable text form) to this path.
    #[arg(long)]
    dump_system: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// A report produced by `qes solve`.
    #[arg(long)]
    report: PathBuf,
    /// Verification report output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 480)]
    grid_n: usize,
    #[arg(long)]
    grid_length: Option<f64>,
    #[arg(long)]
    numerov: bool,
    /// Also cross-check energies against the independent discrete
    /// spectrum.
    #[arg(long)]
    with_fd: bool,
    /// Oracle PASS threshold.
    #[arg(long, default_value_t = 1e-7)]
    oracle_tol: f64,
    /// Dump (record, x, psi, residual) rows for plotting.
    #[arg(long)]
    psi_csv: Option<PathBuf>,
    /// Succeed on an empty record list.
    #[arg(long)]
    allow_empty: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    common: CommonSolveArgs,
    /// Sweep declaration: name=start:stop:steps (steps 0 = single point).
    #[arg(long, value_parser = parse_sweep)]
    sweep: SweepSpec,
    /// CSV output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Debug)]
struct SweepSpec {
    name: String,
    start: f64,
    stop: f64,
    steps: usize,
}

fn parse_kv(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or("expected key=value")?;
    Ok((k.trim().to_string(), v.trim().parse().map_err(|e| format!("{e}"))?))
}

fn parse_sweep(s: &str) -> Result<SweepSpec, String> {
    let (name, range) = s.split_once('=').ok_or("expected name=start:stop:steps")?;
    let parts: Vec<&str> = range.split(':').collect();
    if parts.len() != 3 {
        return Err("expected name=start:stop:steps".into());
    }
    Ok(SweepSpec {
        name: name.trim().to_string(),
        start: parts[0].parse().map_err(|e| format!("{e}"))?,
        stop: parts[1].parse().map_err(|e| format!("{e}"))?,
        steps: parts[2].parse().map_err(|e| format!("{e}"))?,
    })
}

fn main() -> ExitCode {
    qes::init_threads_from_env();
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Solve(args) => run_solve(args),
        Cmd::Verify(args) => run_verify(args),
        Cmd::Sweep(args) => run_sweep(args),
        Cmd::Catalog { name } => run_catalog(name),
    };
    match code {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = match e.downcast_ref::<QesError>() {
                Some(QesError::NoWeightSolution)
                | Some(QesError::NoPencilSolution)
                | Some(QesError::LinAlg(_)) => 3,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}

struct LoadedProblem {
    spec: ProblemSpec,
    preset: Option<String>,
    params: Vec<(String, f64)>,
    default_levels: u32,
    oracle_length: f64,
}

fn load_problem(input: &InputArgs) -> anyhow::Result<LoadedProblem> {
    match (&input.preset, &input.input) {
        (Some(name), None) => {
            let p: Vec<(&str, f64)> =
                input.params.iter().map(|(k, v)| (k.as_str(), *v)).collect();
            let pre = catalog::preset(name, &p)?;
            Ok(LoadedProblem {
                spec: pre.spec,
                preset: Some(pre.name),
                params: input.params.clone(),
                default_levels: pre.n_levels,
                oracle_length: pre.oracle_length,
            })
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
            let spec: ProblemSpec = serde_json::from_str(&text)
                .map_err(|e| anyhow::anyhow!("parse error in {}: {e}", path.display()))?;
            let n = spec.ansatz.n;
            Ok(LoadedProblem {
                spec,
                preset: None,
                params: Vec::new(),
                default_levels: n,
                oracle_length: 10.0,
            })
        }
        _ => anyhow::bail!("exactly one of --preset or --input is required"),
    }
}

fn solve_options(common: &CommonSolveArgs) -> SolveOptions {
    let mut opts = SolveOptions::default();
    opts.stage.seed = common.seed;
    opts.stage.tol_abs = common.tol_abs;
    opts.stage.multistart = common.multistart;
    opts.dedup_tol = common.dedup_tol;
    opts
}

fn oracle_options(pass_tol: f64, numerov: bool, with_fd: bool) -> OracleOptions {
    OracleOptions {
        pass_tol,
        stencil: if numerov { Stencil::Numerov } else { Stencil::ThreePoint },
        with_fd,
        ..OracleOptions::default()
    }
}

fn run_problem(
    loaded: &LoadedProblem,
    common: &CommonSolveArgs,
) -> anyhow::Result<(Vec<u32>, Vec<SolutionRecord>)> {
    let mut spec = loaded.spec.clone();
    if let Some(mode) = &common.mode {
        spec.mode = match mode.as_str() {
            "simple" => qes::model::Mode::Simple,
            _ => qes::model::Mode::General,
        };
    }
    let opts = solve_options(common);
    let (orders, mut records) = match (common.only_n, common.max_n) {
        (Some(n), _) => (vec![n], solve(&spec.with_n(n), &opts)?),
        (None, Some(n)) => ((0..=n).collect(), solve_levels(&spec, n, &opts)?),
        (None, None) => {
            let n = loaded.default_levels;
            ((0..=n).collect(), solve_levels(&spec, n, &opts)?)
        }
    };
    if !common.all_branches {
        records.retain(|r| r.bounded != Some(false));
    }
    Ok((orders, records))
}

fn run_solve(args: SolveArgs) -> anyhow::Result<ExitCode> {
    let loaded = load_problem(&args.input)?;
    if let Some(path) = &args.dump_system {
        let sys = qes::assembler::assemble(&loaded.spec)?;
        fs::write(path, sys.dump())?;
    }
    let (orders, records) = run_problem(&loaded, &args.common)?;
    let grid_len = args.common.grid_length.unwrap_or(loaded.oracle_length);
    let grid = Grid::for_domain(&loaded.spec.domain, grid_len, args.common.grid_n);
    let oracle_opts = oracle_options(args.common.oracle_tol, args.common.numerov, false);
    let verifications = oracle::verify_records(&loaded.spec, &records, &grid, &oracle_opts);
    let any_pass = verifications
        .iter()
        .any(|v| v.as_ref().map(|r| r.pass).unwrap_or(false));
    let pass_count = verifications
        .iter()
        .filter(|v| v.as_ref().map(|r| r.pass).unwrap_or(false))
        .count();

    let report = SolveReport {
        schema_version: SCHEMA_VERSION,
        generator: SolveReport::generator(),
        seed: args.common.seed,
        preset: loaded.preset.clone(),
        params: loaded.params.clone(),
        tolerances: ToleranceBlock {
            tol_abs: args.common.tol_abs,
            dedup_tol: args.common.dedup_tol,
            newton_tol: 1e-11,
            oracle_pass: args.common.oracle_tol,
        },
        orders,
        spec: loaded.spec.clone(),
        records: records.clone(),
        verifications: verifications
            .iter()
            .filter_map(|v| v.as_ref().ok().cloned())
            .collect(),
    };
    let json = serde_json::to_string_pretty(&report)?;
    match &args.out {
        Some(path) => fs::write(path, json.as_bytes())?,
        None => println!("{json}"),
    }
    eprintln!("{} record(s); {} pass the oracle", records.len(), pass_count);
    if any_pass || (args.allow_empty && records.is_empty()) {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

fn run_verify(args: VerifyArgs) -> anyhow::Result<ExitCode> {
    let text = fs::read_to_string(&args.report)
        .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", args.report.display()))?;
    let report: SolveReport = serde_json::from_str(&text)
        .map_err(|e| anyhow::anyhow!("parse error in {}: {e}", args.report.display()))?;
    let grid_len = args.grid_length.unwrap_or(10.0);
    let grid = Grid::for_domain(&report.spec.domain, grid_len, args.grid_n);
    let oracle_opts = oracle_options(args.oracle_tol, args.numerov, args.with_fd);
    let results = oracle::verify_records(&report.spec, &report.records, &grid, &oracle_opts);
    let mut reports = Vec::new();
    let mut all_pass = true;
    for (i, res) in results.iter().enumerate() {
        match res {
            Ok(rep) => {
                eprintln!(
                    "record {i}: residual {:.3e} nodes {} bounded {} order {:.2} -> {}",
                    rep.residual_rel,
                    rep.node_count,
                    rep.bounded,
                    rep.order_estimate,
                    if rep.pass { "PASS" } else { "FAIL" }
                );
                all_pass &= rep.pass;
                reports.push(rep.clone());
            }
            Err(e) => {
                eprintln!("record {i}: oracle error: {e}");
                all_pass = false;
            }
        }
    }
    if report.records.is_empty() {
        all_pass = args.allow_empty;
    }
    if let Some(path) = &args.psi_csv {
        let mut out = String::from("record,x,psi,residual\n");
        for (i, rec) in report.records.iter().enumerate() {
            let resolved = rec.resolved_spec(&report.spec);
            let xs = grid.points();
            let psi = oracle::psi_on_grid(&resolved, &rec.psi_form(), &xs)?;
            let e = rec.energy.to_f64();
            let dx = grid.spacing();
            for k in 2..xs.len().saturating_sub(2) {
                let w: Option<Vec<f64>> = (k - 2..=k + 2).map(|t| psi[t]).collect();
                let (Some(w), Some(v)) = (
                    w,
                    resolved.basis.h_closed(xs[k]).and_then(|h| resolved.v_at(h)),
                ) else {
                    continue;
                };
                let d2 =
                    (-w[0] + 16.0 * w[1] - 30.0 * w[2] + 16.0 * w[3] - w[4]) / (12.0 * dx * dx);
                let r = -d2 + v * w[2] - e * w[2];
                out.push_str(&format!("{i},{},{},{}\n", xs[k], w[2], r));
            }
        }
        fs::write(path, out)?;
    }
    let verify_report = VerifyReport {
        schema_version: SCHEMA_VERSION,
        generator: SolveReport::generator(),
        all_pass,
        reports,
    };
    let json = serde_json::to_string_pretty(&verify_report)?;
    match &args.out {
        Some(path) => fs::write(path, json.as_bytes())?,
        None => println!("{json}"),
    }
    Ok(if all_pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn run_sweep(args: SweepArgs) -> anyhow::Result<ExitCode> {
    let sweep = &args.sweep;
    if args.input.preset.is_none() {
        anyhow::bail!("sweep requires --preset");
    }
    let grid_n = args.common.grid_n;
    let mut rows = String::from(
        "param,value,record,order,energy,lambda,glog,bounded,fitted,oracle_residual\n",
    );
    let count = sweep.steps.max(1);
    for i in 0..=sweep.steps {
        let value = if sweep.steps == 0 {
            sweep.start
        } else {
            sweep.start + (sweep.stop - sweep.start) * i as f64 / count as f64
        };
        let mut input = args.input.clone();
        input.params.retain(|(k, _)| k != &sweep.name);
        input.params.push((sweep.name.clone(), value));
        let loaded = load_problem(&input)?;
        let (_, records) = run_problem(&loaded, &args.common)?;
        let grid_len = args.common.grid_length.unwrap_or(loaded.oracle_length);
        let grid = Grid::for_domain(&loaded.spec.domain, grid_len, grid_n);
        let oracle_opts = oracle_options(args.common.oracle_tol, args.common.numerov, false);
        let verifs = oracle::verify_records(&loaded.spec, &records, &grid, &oracle_opts);
        for (ri, rec) in records.iter().enumerate() {
            let fitted = rec
                .fitted_potential
                .iter()
                .map(|(k, v)| format!("{}={}", fitted_key(k), v.to_f64()))
                .collect::<Vec<_>>()
                .join(";");
            let resid = verifs
                .get(ri)
                .and_then(|r| r.as_ref().ok())
                .map(|r| format!("{}", r.residual_rel))
                .unwrap_or_else(|| "nan".into());
            rows.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                sweep.name,
                value,
                ri,
                rec.ansatz_n,
                rec.energy.to_f64(),
                rec.lambda.to_f64(),
                rec.glog.to_f64(),
                rec.bounded.map(|b| b.to_string()).unwrap_or_default(),
                fitted,
                resid,
            ));
        }
        if sweep.steps == 0 {
            break;
        }
    }
    match &args.out {
        Some(path) => fs::write(path, rows.as_bytes())?,
        None => {
            std::io::stdout().write_all(rows.as_bytes())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn fitted_key(k: &qes::model::AdjustableKey) -> String {
    match k {
        qes::model::AdjustableKey::V { k } => format!("V[{k}]"),
        qes::model::AdjustableKey::Mod { l, k } => format!("v[{l},{k}]"),
    }
}

fn run_catalog(name: Option<String>) -> anyhow::Result<ExitCode> {
    match name {
        Some(n) => {
            let pre = catalog::preset(&n, &[])?;
            println!("{}: {}", pre.name, catalog::describe(&pre.name));
            println!("provenance: {}", pre.provenance);
            println!("default parameters: {:?}", pre.params);
            println!("levels: 0..={}", pre.n_levels);
            println!("expected solutions:");
            for g in &pre.goldens {
                println!(
                    "  order {} energy {:+.12} {} — {}",
                    g.n,
                    g.energy,
                    g.lambda.map(|l| format!("exponent {l:+.9}")).unwrap_or_default(),
                    g.label
                );
            }
        }
        None => {
            for n in catalog::names() {
                println!("{n:26} {}", catalog::describe(n));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
