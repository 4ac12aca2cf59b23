use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use voigt_lab::io::{read_csv, read_snapshot};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_voigt-lab")).args(args).output().expect("binary runs")
}

fn summary(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stdout);
    let line = text.lines().last().expect("summary line");
    serde_json::from_str(line).expect("summary is JSON")
}

fn set(pairs: &[(&str, String)]) -> Vec<String> {
    pairs.iter().flat_map(|(k, v)| ["--set".to_string(), format!("{k}={v}")]).collect()
}

/// Empty config file next to the run directory, so everything comes from defaults and overrides.
fn empty_config(dir: &Path) -> String {
    let path = dir.with_extension("cfg");
    std::fs::write(&path, "# defaults\n").unwrap();
    path.display().to_string()
}

fn run_with(cmd: &str, dir: &Path, extra: &[(&str, String)]) -> Output {
    let mut pairs = vec![("output_dir", dir.display().to_string())];
    pairs.extend(extra.iter().cloned());
    let mut args = vec![cmd.to_string(), "--config".into(), empty_config(dir)];
    args.extend(set(&pairs));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    run(&refs)
}

#[test]
fn taylor_green_simulation_keeps_energy_constant() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("tg");
    let out = run_with(
        "simulate",
        &dir,
        &[
            ("dim", "2".into()),
            ("n", "16".into()),
            ("init", "taylor_green".into()),
            ("t_end", "0.1".into()),
            ("dt", "0.01".into()),
            ("stride", "1".into()),
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(&out);
    assert_eq!(s["status"], "ok");
    assert_eq!(s["steps"], 10);
    for f in ["config.txt", "summary.json", "initial.snap", "final.snap", "series.csv"] {
        assert!(dir.join(f).is_file(), "missing {f}");
    }
    let recs = read_csv(&dir.join("series.csv")).unwrap();
    assert_eq!(recs.len(), 11);
    for r in &recs {
        assert!((r.modified_energy - recs[0].modified_energy).abs() < 1e-14);
        assert!((r.kinetic_energy - 0.5).abs() < 1e-14);
    }
    let snap = read_snapshot(&dir.join("final.snap")).unwrap();
    assert!((snap.state.time - 0.1).abs() < 1e-15);
    assert_eq!(snap.state.u.grid().n(), 16);
}

#[test]
fn existing_output_needs_force() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    let extra = [("dim", "2".to_string()), ("n", "8".into()), ("t_end", "0.01".into()), ("dt", "0.01".into())];
    assert_eq!(run_with("simulate", &dir, &extra).status.code(), Some(0));
    let again = run_with("simulate", &dir, &extra);
    assert_eq!(again.status.code(), Some(1));
    assert_eq!(summary(&again)["status"], "config_error");

    let mut args = vec!["simulate".to_string(), "--force".into(), "--config".into(), empty_config(&dir)];
    args.extend(set(&[("output_dir", dir.display().to_string())]));
    args.extend(set(&extra));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    assert_eq!(run(&refs).status.code(), Some(0));
}

#[test]
fn config_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    std::fs::write(&cfg, "# bad\nn = 7\nbogus = 1\n").unwrap();
    let out = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("n must be even"), "{err}");
    assert!(err.contains("bogus"), "{err}");
    assert!(err.contains("usage"), "{err}");
    assert_eq!(summary(&out)["status"], "config_error");
}

#[test]
fn missing_config_exits_with_one_and_usage() {
    let out = run(&["converge", "--set", "n=8"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("usage"));
    assert_eq!(summary(&out)["status"], "config_error");
}

#[test]
fn drift_abort_exits_with_two_and_keeps_last_state() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("abort");
    let out = run_with(
        "simulate",
        &dir,
        &[
            ("dim", "2".into()),
            ("n", "16".into()),
            ("dt", "0.05".into()),
            ("t_end", "1".into()),
            ("energy", "50".into()),
            ("drift_budget", "1e-15".into()),
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    let s = summary(&out);
    assert_eq!(s["status"], "aborted");
    assert!(s["abort_time"].as_f64().unwrap() > 0.0);
    assert!(dir.join("abort.snap").is_file());
    assert!(dir.join("summary.json").is_file());
}

#[test]
fn verify_passes() {
    let out = run(&["verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(&out);
    assert_eq!(s["passed"], true);
    assert!(s["checks"].as_array().unwrap().len() >= 8);
}

#[test]
fn galerkin_writes_cauchy_table() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("gal");
    let out = run_with(
        "galerkin",
        &dir,
        &[
            ("dim", "2".into()),
            ("init", "random_analytic".into()),
            ("n_list", "8,16".into()),
            ("t_end", "0.05".into()),
            ("dt", "0.01".into()),
            ("stride", "1".into()),
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(dir.join("cauchy.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
}
