use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use voigt_lab::diagnostics::{
    blowup_sweep, convergence_study, galerkin_cauchy_test, hm_growth_monitor, radius_series, DiagnosticsRecord,
    StudyError,
};
use voigt_lab::dynamics::{RhsKind, SimState};
use voigt_lab::init::{random_analytic, taylor_green};
use voigt_lab::integrate::{integrate, IntegrationError};
use voigt_lab::io::{
    fmt_f64, parse_config_with, read_snapshot, write_csv, write_snapshot, write_table, InitialCondition,
    MagneticInit, RunConfig,
};
use voigt_lab::spectral::GridSpec;
use voigt_lab::verify::verification_suite;
use voigt_lab::Field;

#[derive(Parser, Debug)]
#[command(name = "voigt-lab", version, about = "Euler-Voigt and MHD-Voigt experiments on the periodic torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate one trajectory and record diagnostics
    Simulate(RunArgs),
    /// Error against the Euler run as alpha -> 0
    Converge(RunArgs),
    /// Sweep alpha and extrapolate the blow-up indicator
    Blowup(RunArgs),
    /// Analyticity-radius series and H^m growth fits
    Gevrey(RunArgs),
    /// Differences between Galerkin truncations N and 2N
    Galerkin(RunArgs),
    /// Check the fast paths against the brute-force oracles
    Verify(RunArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Configuration file (key = value lines)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key; repeatable
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Write into a non-empty output directory
    #[arg(long)]
    force: bool,
}

/// Exit status classes.
enum Failure {
    Config(anyhow::Error),
    Runtime { error: anyhow::Error, summary: Value },
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure::Runtime {
            error,
            summary: Value::Null,
        }
    }
}

impl From<voigt_lab::Error> for Failure {
    fn from(error: voigt_lab::Error) -> Self {
        anyhow::Error::from(error).into()
    }
}

fn config_error(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Config(e.into())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    ExitCode::from(cli_main(&argv) as u8)
}

/// 0 on success, 1 on configuration errors, 2 on runtime aborts.
fn cli_main(argv: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (name, args) = match &cli.command {
        Command::Simulate(a) => ("simulate", a),
        Command::Converge(a) => ("converge", a),
        Command::Blowup(a) => ("blowup", a),
        Command::Gevrey(a) => ("gevrey", a),
        Command::Galerkin(a) => ("galerkin", a),
        Command::Verify(a) => ("verify", a),
    };
    match run(name, args) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            eprintln!("usage: voigt-lab {name} --config PATH [--set KEY=VALUE]... [--force]");
            println!("{}", json!({"command": name, "status": "config_error", "error": format!("{e:#}")}));
            1
        }
        Err(Failure::Runtime { error, summary }) => {
            eprintln!("error: {error:#}");
            let mut s = if summary.is_object() { summary } else { json!({"command": name}) };
            s["status"] = json!("aborted");
            s["error"] = json!(format!("{error:#}"));
            println!("{s}");
            2
        }
    }
}

fn load_config(name: &str, args: &RunArgs) -> Result<RunConfig, Failure> {
    let text = match &args.config {
        Some(p) => fs::read_to_string(p)
            .with_context(|| format!("cannot read config '{}'", p.display()))
            .map_err(config_error)?,
        None if name == "verify" => String::new(),
        None => return Err(config_error(anyhow!("--config is required for {name}"))),
    };
    parse_config_with(&text, &args.set).map_err(config_error)
}

fn run(name: &str, args: &RunArgs) -> Result<Value, Failure> {
    let cfg = load_config(name, args)?;
    if name == "verify" {
        return verify();
    }
    if !cfg.output_dir_available(args.force) {
        return Err(config_error(anyhow!(
            "output directory '{}' is not empty; pass --force to overwrite",
            cfg.output_dir.display()
        )));
    }
    fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("cannot create '{}'", cfg.output_dir.display()))?;
    fs::write(cfg.output_dir.join("config.txt"), cfg.to_text()).context("writing config echo")?;
    let result = match name {
        "simulate" => simulate(&cfg),
        "converge" => converge(&cfg),
        "blowup" => blowup(&cfg),
        "gevrey" => gevrey(&cfg),
        "galerkin" => galerkin(&cfg),
        other => unreachable!("unknown subcommand {other}"),
    };
    let mut summary = match result {
        Ok(s) => s,
        Err(Failure::Runtime { error, mut summary }) => {
            if !summary.is_object() {
                summary = json!({});
            }
            summary["command"] = json!(name);
            summary["output_dir"] = json!(cfg.output_dir.display().to_string());
            summary["status"] = json!("aborted");
            summary["error"] = json!(format!("{error:#}"));
            write_summary(&cfg.output_dir, &summary)?;
            return Err(Failure::Runtime { error, summary });
        }
        Err(e) => return Err(e),
    };
    summary["command"] = json!(name);
    summary["status"] = json!("ok");
    summary["output_dir"] = json!(cfg.output_dir.display().to_string());
    summary["config"] = serde_json::to_value(&cfg).map_err(anyhow::Error::from)?;
    write_summary(&cfg.output_dir, &summary)?;
    Ok(summary)
}

fn write_summary(dir: &Path, summary: &Value) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(summary)?;
    fs::write(dir.join("summary.json"), text + "\n").context("writing summary.json")
}

/// Builds the initial state on `grid`.
fn initial_state(cfg: &RunConfig, grid: GridSpec) -> Result<SimState<f64>, Failure> {
    let mut state = match &cfg.init {
        InitialCondition::TaylorGreen => SimState::new(taylor_green::<f64>(grid)),
        InitialCondition::RandomAnalytic { seed, tau0, energy } => {
            SimState::new(random_analytic::<f64>(grid, *seed, *tau0, *energy).map_err(config_error)?)
        }
        InitialCondition::FromSnapshot { path } => {
            let snap = read_snapshot(path)
                .with_context(|| format!("reading snapshot '{}'", path.display()))
                .map_err(config_error)?;
            let s = snap.state;
            let u = s.u.resample(grid).map_err(config_error)?;
            let b = s.b.map(|b| b.resample(grid)).transpose().map_err(config_error)?;
            SimState { time: s.time, u, b }
        }
    };
    match &cfg.magnetic {
        MagneticInit::None => {}
        MagneticInit::Aligned => state.b = Some(state.u.clone()),
        MagneticInit::RandomAnalytic { seed, energy } => {
            let tau0 = match cfg.init {
                InitialCondition::RandomAnalytic { tau0, .. } => tau0,
                _ => 0.1,
            };
            state.b = Some(random_analytic::<f64>(grid, *seed, tau0, *energy).map_err(config_error)?);
        }
    }
    if cfg.rhs != RhsKind::MhdVoigt {
        state.b = None;
    } else if state.b.is_none() {
        return Err(config_error(anyhow!("rhs = mhd_voigt needs magnetic initial data")));
    }
    Ok(state)
}

fn hydrodynamic(cfg: &RunConfig, grid: GridSpec) -> Result<Field, Failure> {
    if cfg.rhs == RhsKind::MhdVoigt {
        return Err(config_error(anyhow!("this study runs the hydrodynamic Voigt model; set rhs = voigt")));
    }
    Ok(initial_state(cfg, grid)?.u)
}

fn study_failure(e: StudyError) -> Failure {
    match e {
        StudyError::Config(e) => config_error(e),
        StudyError::ReferenceFailed { time, message, report } => Failure::Runtime {
            summary: json!({ "partial_report": *report }),
            error: anyhow!("reference run failed at t = {time}: {message}"),
        },
        other => Failure::Runtime {
            error: other.into(),
            summary: Value::Null,
        },
    }
}

fn simulate(cfg: &RunConfig) -> Result<Value, Failure> {
    let grid = cfg.grid();
    let state = initial_state(cfg, grid)?;
    let params = cfg.params();
    let dir = &cfg.output_dir;
    write_snapshot(&state, &params, &dir.join("initial.snap")).context("writing initial snapshot")?;
    let mut records: Vec<DiagnosticsRecord> = Vec::new();
    let outcome = integrate(&state, &params, cfg.rhs, &cfg.integrator(), &mut records);
    write_csv(&records, &dir.join("series.csv"))?;
    match outcome {
        Ok(s) => {
            write_snapshot(&s.state, &params, &dir.join("final.snap")).context("writing final snapshot")?;
            let first = records.first().map(|r| r.conserved());
            let last = records.last().map(|r| r.conserved());
            Ok(json!({
                "steps": s.steps,
                "final_time": s.state.time,
                "max_relative_drift": s.max_relative_drift,
                "conserved_initial": first,
                "conserved_final": last,
                "records": records.len(),
            }))
        }
        Err(e) => {
            let (time, last) = match &e {
                IntegrationError::BlowUp { time, last_finite } => (*time, Some(last_finite.as_ref())),
                IntegrationError::DriftExceeded { time, state, .. } => (*time, Some(state.as_ref())),
                IntegrationError::Model(_) => (f64::NAN, None),
            };
            if let Some(s) = last {
                write_snapshot(s, &params, &dir.join("abort.snap")).context("writing abort snapshot")?;
            }
            Err(Failure::Runtime {
                summary: json!({"abort_time": time, "records": records.len()}),
                error: anyhow!("{e}"),
            })
        }
    }
}

fn converge(cfg: &RunConfig) -> Result<Value, Failure> {
    let u = hydrodynamic(cfg, cfg.grid())?;
    let report = convergence_study(&u, &cfg.alphas, &cfg.sweep()).map_err(study_failure)?;
    let header: Vec<String> = ["alpha", "l2_error [L2]", "modified_error [L2]", "k_estimate [1]", "max_relative_drift [1]"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                fmt_f64(r.alpha),
                fmt_f64(r.l2_error),
                fmt_f64(r.modified_error),
                fmt_f64(r.k_estimate),
                fmt_f64(r.max_relative_drift),
            ]
        })
        .collect();
    write_table(&cfg.output_dir.join("convergence.csv"), &header, &rows)?;
    Ok(json!({
        "slope": report.slope,
        "k_ratio": report.k_ratio,
        "reference_time_error": report.reference_time_error,
        "time_error_dominates": report.time_error_dominates,
        "degenerate": report.degenerate,
    }))
}

fn blowup(cfg: &RunConfig) -> Result<Value, Failure> {
    let u = hydrodynamic(cfg, cfg.grid())?;
    let report = blowup_sweep(&u, &cfg.alphas, &cfg.sweep()).map_err(study_failure)?;
    let mut header = vec!["time [1]".to_string()];
    header.extend(report.alphas.iter().map(|a| format!("indicator_alpha_{a} [L2^2]")));
    header.push("extrapolated [L2^2]".into());
    header.push("slope_b [L2^2]".into());
    let rows: Vec<Vec<String>> = (0..report.times.len())
        .map(|j| {
            let mut row = vec![fmt_f64(report.times[j])];
            row.extend(report.indicator.iter().map(|r| fmt_f64(r[j])));
            row.push(fmt_f64(report.extrapolated[j]));
            row.push(fmt_f64(report.slope_b[j]));
            row
        })
        .collect();
    write_table(&cfg.output_dir.join("blowup.csv"), &header, &rows)?;
    Ok(json!({
        "verdict": report.verdict.to_string(),
        "reason": report.reason,
        "noise_floor": report.noise_floor,
        "max_extrapolated": report.extrapolated.iter().cloned().fold(f64::MIN, f64::max),
        "min_extrapolated": report.extrapolated.iter().cloned().fold(f64::MAX, f64::min),
        "model_consistent": report.model_consistent,
        "identity_holds": report.identity_holds,
        "identity_drift": report.identity_drift,
        "resolution_variation": report.resolution_variation,
    }))
}

fn gevrey(cfg: &RunConfig) -> Result<Value, Failure> {
    let grid = cfg.grid();
    let u = hydrodynamic(cfg, grid)?;
    let window = cfg.radius_window.resolve(grid);
    let series = radius_series(&u, cfg.alpha, window, &cfg.sweep()).map_err(study_failure)?;
    let header: Vec<String> = [
        "time [1]",
        "tau [length]",
        "slope_std_error [1]",
        "fit_quality [1]",
        "shells_used [1]",
        "inconclusive [bool]",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let rows: Vec<Vec<String>> = series
        .times
        .iter()
        .zip(&series.fits)
        .map(|(t, f)| {
            vec![
                fmt_f64(*t),
                fmt_f64(f.tau),
                fmt_f64(f.slope_std_error),
                fmt_f64(f.fit_quality),
                f.shells_used.to_string(),
                f.inconclusive.to_string(),
            ]
        })
        .collect();
    write_table(&cfg.output_dir.join("radius.csv"), &header, &rows)?;

    let state = SimState::new(u);
    let mut records = Vec::new();
    integrate(&state, &cfg.params(), RhsKind::Voigt, &cfg.integrator(), &mut records)
        .map_err(|e| anyhow!("{e}"))?;
    write_csv(&records, &cfg.output_dir.join("series.csv"))?;
    let mut growth = Vec::new();
    for &m in &cfg.hm_orders {
        if m.fract() != 0.0 || m < 1.0 {
            continue;
        }
        let g = hm_growth_monitor(&records, m as u32, cfg.growth_margin, cfg.drift_budget * cfg.t_end.abs().max(1.0))
            .map_err(|e| anyhow!(e))?;
        growth.push(g);
    }
    Ok(json!({
        "window": series.fits.first().map(|f| f.window),
        "tau_initial": series.fits.first().map(|f| f.tau),
        "tau_final": series.fits.last().map(|f| f.tau),
        "tau_non_increasing": series.non_increasing,
        "growth": growth,
    }))
}

fn galerkin(cfg: &RunConfig) -> Result<Value, Failure> {
    let finest = 2 * cfg.n_list.iter().copied().max().unwrap_or(cfg.n);
    let grid = GridSpec::new(cfg.dim, finest).map_err(config_error)?;
    let u = hydrodynamic(cfg, grid)?;
    let report = galerkin_cauchy_test(&u, &cfg.n_list, cfg.alpha, &cfg.sweep()).map_err(study_failure)?;
    let header = vec!["n [1]".to_string(), "max_gradient_difference [H1]".to_string()];
    let rows: Vec<Vec<String>> = report.rows.iter().map(|(n, d)| vec![n.to_string(), fmt_f64(*d)]).collect();
    write_table(&cfg.output_dir.join("cauchy.csv"), &header, &rows)?;
    Ok(json!({
        "rows": report.rows,
        "strictly_decreasing": report.strictly_decreasing,
        "degenerate": report.degenerate,
    }))
}

fn verify() -> Result<Value, Failure> {
    let checks = verification_suite(5).map_err(|e| anyhow!(e))?;
    for c in &checks {
        eprintln!(
            "{} {:<36} worst {:.3e} (tolerance {:.0e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.worst,
            c.tolerance
        );
    }
    let all = checks.iter().all(|c| c.passed);
    let summary = json!({"command": "verify", "checks": checks, "passed": all});
    if all {
        let mut s = summary;
        s["status"] = json!("ok");
        return Ok(s);
    }
    Err(Failure::Runtime {
        error: anyhow!("oracle verification failed"),
        summary,
    })
}
