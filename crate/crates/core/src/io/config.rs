//! Flat `key = value` run configuration.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::diagnostics::{DiagnosticsSpec, FitWindow, SweepConfig};
use crate::dynamics::{RhsKind, VoigtParams};
use crate::integrate::{IntegratorConfig, Method};
use crate::spectral::GridSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfigErrorKind {
    Syntax,
    UnknownKey,
    Duplicate,
    TypeMismatch,
    Constraint,
}

/// One problem with one key. `line` is 1-based; 0 marks a `--set` override.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfigError {
    pub line: usize,
    pub key: String,
    pub kind: ConfigErrorKind,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "override: {}: {}", self.key, self.message)
        } else {
            write!(f, "line {}: {}: {}", self.line, self.key, self.message)
        }
    }
}

/// Every problem found in a configuration.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum InitialCondition {
    TaylorGreen,
    RandomAnalytic { seed: u64, tau0: f64, energy: f64 },
    FromSnapshot { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum MagneticInit {
    None,
    /// `𝓑 = u`
    Aligned,
    RandomAnalytic { seed: u64, energy: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusWindow {
    Off,
    Auto,
    Fixed { min_shell: usize, max_shell: usize },
}

impl RadiusWindow {
    pub fn resolve(self, grid: GridSpec) -> Option<FitWindow> {
        match self {
            Self::Off => None,
            Self::Auto => Some(FitWindow::default_for(grid)),
            Self::Fixed { min_shell, max_shell } => Some(FitWindow { min_shell, max_shell }),
        }
    }
}

/// A validated run configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub rhs: RhsKind,
    pub dim: usize,
    pub n: usize,
    pub alpha: f64,
    pub alpha_m: f64,
    pub method: Method,
    pub dt: f64,
    pub t_end: f64,
    pub drift_budget: f64,
    pub stride: usize,
    pub init: InitialCondition,
    pub magnetic: MagneticInit,
    pub hm_orders: Vec<f64>,
    pub radius_window: RadiusWindow,
    pub alphas: Vec<f64>,
    pub n_list: Vec<usize>,
    pub growth_margin: f64,
    pub resolution_check: bool,
    pub output_dir: PathBuf,
}

/// Key, default and one-line description, in documentation order.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("rhs", "voigt", "euler | voigt | mhd_voigt"),
    ("dim", "3", "2 or 3"),
    ("n", "32", "grid points per axis, even, >= 8"),
    ("alpha", "0.1", "velocity regularization length, >= 0"),
    ("alpha_m", "0.05", "magnetic regularization length, >= 0"),
    ("method", "rk4", "rk4 | rk2"),
    ("dt", "0.001", "time step, finite and non-zero; negative integrates backwards"),
    ("t_end", "1.0", "final time"),
    ("drift_budget", "1e-8", "allowed relative drift of the conserved energy per unit time"),
    ("stride", "100", "steps between diagnostic records, >= 1"),
    ("init", "random_analytic", "taylor_green | random_analytic | from_snapshot"),
    ("seed", "0", "random_analytic seed"),
    ("tau0", "0.1", "random_analytic envelope decay, >= 0"),
    ("energy", "0.5", "random_analytic |u|^2, >= 0"),
    ("snapshot", "", "snapshot path for init = from_snapshot"),
    ("magnetic", "none", "none | aligned | random_analytic"),
    ("magnetic_seed", "seed + 1", "seed for magnetic = random_analytic"),
    ("magnetic_energy", "energy", "|B|^2 for magnetic = random_analytic"),
    ("hm_orders", "1,2,3", "Sobolev orders recorded, each in [0, 4]"),
    ("radius_window", "auto", "off | auto | MIN..MAX shell indices"),
    ("alphas", "0.1,0.05,0.025,0.0125", "strictly decreasing alpha sweep"),
    ("n_list", "8,16,32", "strictly increasing resolutions for the Galerkin test"),
    ("growth_margin", "0.5", "slack added to the growth-exponent bound"),
    ("resolution_check", "true", "re-run the smallest alpha at 2n in the blow-up sweep"),
    ("output_dir", "runs/default", "run directory"),
];

struct Entry {
    line: usize,
    value: String,
}

struct Reader<'a> {
    entries: &'a HashMap<String, Entry>,
    errors: Vec<ConfigError>,
}

impl Reader<'_> {
    fn line(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |e| e.line)
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    fn error(&mut self, key: &str, kind: ConfigErrorKind, message: impl Into<String>) {
        self.errors.push(ConfigError {
            line: self.line(key),
            key: key.to_string(),
            kind,
            message: message.into(),
        });
    }

    fn parsed<V: FromStr>(&mut self, key: &str, default: V, what: &str) -> V {
        match self.raw(key) {
            None => default,
            Some(s) => match s.parse() {
                Ok(v) => v,
                Err(_) => {
                    self.error(key, ConfigErrorKind::TypeMismatch, format!("expected {what}, got '{s}'"));
                    default
                }
            },
        }
    }

    fn list<V: FromStr>(&mut self, key: &str, default: Vec<V>, what: &str) -> Vec<V> {
        let Some(s) = self.raw(key).map(str::to_string) else {
            return default;
        };
        let mut out = Vec::new();
        for item in s.split(',').map(str::trim) {
            match item.parse() {
                Ok(v) => out.push(v),
                Err(_) => {
                    self.error(key, ConfigErrorKind::TypeMismatch, format!("expected a list of {what}, got '{s}'"));
                    return default;
                }
            }
        }
        out
    }

    fn check(&mut self, ok: bool, key: &str, message: impl Into<String>) {
        if !ok {
            self.error(key, ConfigErrorKind::Constraint, message);
        }
    }
}

fn parse_lines(text: &str, line_of: impl Fn(usize) -> usize) -> (Vec<(usize, String, String)>, Vec<ConfigError>) {
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = line_of(i);
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        match content.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => out.push((line, k.trim().to_string(), v.trim().to_string())),
            _ => errors.push(ConfigError {
                line,
                key: content.to_string(),
                kind: ConfigErrorKind::Syntax,
                message: "expected 'key = value'".into(),
            }),
        }
    }
    (out, errors)
}

/// Parses and validates a configuration file.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    parse_config_with(text, &[])
}

/// Parses `text`, then applies `key=value` overrides, which replace file values.
pub fn parse_config_with(text: &str, overrides: &[String]) -> Result<RunConfig, ConfigErrors> {
    let (lines, mut errors) = parse_lines(text, |i| i + 1);
    let mut entries: HashMap<String, Entry> = HashMap::new();
    for (line, key, value) in lines {
        if !KEYS.iter().any(|(k, _, _)| *k == key) {
            errors.push(ConfigError {
                line,
                key,
                kind: ConfigErrorKind::UnknownKey,
                message: "unknown key".into(),
            });
            continue;
        }
        if let Some(prev) = entries.get(&key) {
            errors.push(ConfigError {
                line,
                key: key.clone(),
                kind: ConfigErrorKind::Duplicate,
                message: format!("duplicate key, first set on line {}", prev.line),
            });
            continue;
        }
        entries.insert(key, Entry { line, value });
    }
    let (sets, set_errors) = parse_lines(&overrides.join("\n"), |_| 0);
    errors.extend(set_errors);
    for (_, key, value) in sets {
        if !KEYS.iter().any(|(k, _, _)| *k == key) {
            errors.push(ConfigError {
                line: 0,
                key,
                kind: ConfigErrorKind::UnknownKey,
                message: "unknown key".into(),
            });
            continue;
        }
        entries.insert(key, Entry { line: 0, value });
    }

    let mut r = Reader {
        entries: &entries,
        errors,
    };
    let rhs: RhsKind = r.parsed("rhs", RhsKind::Voigt, "euler, voigt or mhd_voigt");
    let dim: usize = r.parsed("dim", 3, "an integer");
    let n: usize = r.parsed("n", 32, "an integer");
    r.check(dim == 2 || dim == 3, "dim", format!("dim must be 2 or 3, got {dim}"));
    r.check(n.is_multiple_of(2), "n", format!("n must be even, got {n}"));
    r.check(!n.is_multiple_of(2) || n >= 8, "n", format!("n must be at least 8, got {n}"));
    let alpha: f64 = r.parsed("alpha", 0.1, "a number");
    let alpha_m: f64 = r.parsed("alpha_m", 0.05, "a number");
    r.check(alpha >= 0.0 && alpha.is_finite(), "alpha", "alpha must be finite and >= 0");
    r.check(alpha_m >= 0.0 && alpha_m.is_finite(), "alpha_m", "alpha_m must be finite and >= 0");
    let method: Method = r.parsed("method", Method::Rk4, "rk4 or rk2");
    let dt: f64 = r.parsed("dt", 1e-3, "a number");
    let t_end: f64 = r.parsed("t_end", 1.0, "a number");
    r.check(dt != 0.0 && dt.is_finite(), "dt", "dt must be finite and non-zero");
    r.check(t_end.is_finite(), "t_end", "t_end must be finite");
    r.check(t_end * dt.signum() > 0.0 || t_end == 0.0, "t_end", "t_end must lie in the direction of dt from t = 0");
    let drift_budget: f64 = r.parsed("drift_budget", 1e-8, "a number");
    r.check(drift_budget > 0.0, "drift_budget", "drift_budget must be > 0");
    let stride: usize = r.parsed("stride", 100, "an integer");
    r.check(stride >= 1, "stride", "stride must be >= 1");

    let seed: u64 = r.parsed("seed", 0, "a non-negative integer");
    let tau0: f64 = r.parsed("tau0", 0.1, "a number");
    let energy: f64 = r.parsed("energy", 0.5, "a number");
    r.check(tau0 >= 0.0 && tau0.is_finite(), "tau0", "tau0 must be finite and >= 0");
    r.check(energy >= 0.0 && energy.is_finite(), "energy", "energy must be finite and >= 0");
    let init_name: String = r.parsed("init", "random_analytic".to_string(), "a preset name");
    let init = match init_name.as_str() {
        "taylor_green" => InitialCondition::TaylorGreen,
        "random_analytic" => InitialCondition::RandomAnalytic { seed, tau0, energy },
        "from_snapshot" => {
            let path = PathBuf::from(r.raw("snapshot").unwrap_or(""));
            if path.as_os_str().is_empty() {
                r.error("init", ConfigErrorKind::Constraint, "init = from_snapshot needs a snapshot path");
            } else if !path.exists() {
                r.error("snapshot", ConfigErrorKind::Constraint, format!("file '{}' does not exist", path.display()));
            }
            InitialCondition::FromSnapshot { path }
        }
        other => {
            r.error(
                "init",
                ConfigErrorKind::TypeMismatch,
                format!("expected taylor_green, random_analytic or from_snapshot, got '{other}'"),
            );
            InitialCondition::TaylorGreen
        }
    };
    let magnetic_name: String = r.parsed("magnetic", "none".to_string(), "a preset name");
    let magnetic_seed: u64 = r.parsed("magnetic_seed", seed.wrapping_add(1), "a non-negative integer");
    let magnetic_energy: f64 = r.parsed("magnetic_energy", energy, "a number");
    r.check(magnetic_energy >= 0.0 && magnetic_energy.is_finite(), "magnetic_energy", "magnetic_energy must be finite and >= 0");
    let magnetic = match magnetic_name.as_str() {
        "none" => MagneticInit::None,
        "aligned" => MagneticInit::Aligned,
        "random_analytic" => MagneticInit::RandomAnalytic {
            seed: magnetic_seed,
            energy: magnetic_energy,
        },
        other => {
            r.error(
                "magnetic",
                ConfigErrorKind::TypeMismatch,
                format!("expected none, aligned or random_analytic, got '{other}'"),
            );
            MagneticInit::None
        }
    };
    let needs_b = rhs == RhsKind::MhdVoigt;
    let has_b = magnetic != MagneticInit::None;
    if needs_b != has_b && !matches!(init, InitialCondition::FromSnapshot { .. }) {
        let msg = if needs_b {
            "rhs = mhd_voigt needs magnetic initial data"
        } else {
            "magnetic initial data requires rhs = mhd_voigt"
        };
        r.error("magnetic", ConfigErrorKind::Constraint, msg);
    }

    let hm_orders: Vec<f64> = r.list("hm_orders", vec![1.0, 2.0, 3.0], "numbers");
    r.check(
        hm_orders.iter().all(|m| (0.0..=4.0).contains(m)),
        "hm_orders",
        "hm_orders must lie in [0, 4]",
    );
    let radius_window = match r.raw("radius_window").map(str::to_string) {
        None => RadiusWindow::Auto,
        Some(s) if s == "auto" => RadiusWindow::Auto,
        Some(s) if s == "off" => RadiusWindow::Off,
        Some(s) => match s.split_once("..").map(|(a, b)| (a.trim().parse(), b.trim().parse())) {
            Some((Ok(min_shell), Ok(max_shell))) => {
                r.check(min_shell < max_shell, "radius_window", "radius_window needs MIN < MAX");
                r.check(max_shell <= n / 2, "radius_window", "radius_window exceeds the grid");
                RadiusWindow::Fixed { min_shell, max_shell }
            }
            _ => {
                r.error("radius_window", ConfigErrorKind::TypeMismatch, format!("expected off, auto or MIN..MAX, got '{s}'"));
                RadiusWindow::Auto
            }
        },
    };
    let alphas: Vec<f64> = r.list("alphas", vec![0.1, 0.05, 0.025, 0.0125], "numbers");
    r.check(
        alphas.iter().all(|a| *a > 0.0 && a.is_finite()) && alphas.windows(2).all(|w| w[1] < w[0]),
        "alphas",
        "alphas must be positive and strictly decreasing",
    );
    let n_list: Vec<usize> = r.list("n_list", vec![8, 16, 32], "integers");
    r.check(
        n_list.iter().all(|m| m % 2 == 0 && *m >= 8) && n_list.windows(2).all(|w| w[1] > w[0]),
        "n_list",
        "n_list must hold even values >= 8 in increasing order",
    );
    let growth_margin: f64 = r.parsed("growth_margin", 0.5, "a number");
    r.check(growth_margin >= 0.0, "growth_margin", "growth_margin must be >= 0");
    let resolution_check: bool = r.parsed("resolution_check", true, "true or false");
    let output_dir: PathBuf = PathBuf::from(r.raw("output_dir").unwrap_or("runs/default"));

    if !r.errors.is_empty() {
        let mut errors = r.errors;
        errors.sort_by_key(|e| e.line);
        return Err(ConfigErrors(errors));
    }
    Ok(RunConfig {
        rhs,
        dim,
        n,
        alpha,
        alpha_m,
        method,
        dt,
        t_end,
        drift_budget,
        stride,
        init,
        magnetic,
        hm_orders,
        radius_window,
        alphas,
        n_list,
        growth_margin,
        resolution_check,
        output_dir,
    })
}

fn join<V: fmt::Display>(v: &[V]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    pub fn grid(&self) -> GridSpec {
        GridSpec::new(self.dim, self.n).expect("validated")
    }

    pub fn params(&self) -> VoigtParams<f64> {
        VoigtParams::new(self.alpha, self.alpha_m).expect("validated")
    }

    pub fn diagnostics(&self) -> DiagnosticsSpec {
        DiagnosticsSpec {
            hm_orders: self.hm_orders.clone(),
            radius_window: self.radius_window.resolve(self.grid()),
        }
    }

    pub fn integrator(&self) -> IntegratorConfig {
        let mut c = IntegratorConfig::new(self.dt, self.t_end)
            .with_budget(self.drift_budget)
            .with_stride(self.stride)
            .with_diagnostics(self.diagnostics());
        c.method = self.method;
        c
    }

    pub fn sweep(&self) -> SweepConfig {
        let mut s = SweepConfig::new(self.n, self.dt, self.t_end);
        s.method = self.method;
        s.sample_stride = self.stride;
        s.drift_budget = self.drift_budget;
        s.resolution_check = self.resolution_check;
        s
    }

    /// Canonical text form with every key resolved; parsing it yields `self`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        put("rhs", self.rhs.to_string());
        put("dim", self.dim.to_string());
        put("n", self.n.to_string());
        put("alpha", format!("{:?}", self.alpha));
        put("alpha_m", format!("{:?}", self.alpha_m));
        put("method", self.method.to_string());
        put("dt", format!("{:?}", self.dt));
        put("t_end", format!("{:?}", self.t_end));
        put("drift_budget", format!("{:?}", self.drift_budget));
        put("stride", self.stride.to_string());
        match &self.init {
            InitialCondition::TaylorGreen => put("init", "taylor_green".into()),
            InitialCondition::RandomAnalytic { seed, tau0, energy } => {
                put("init", "random_analytic".into());
                put("seed", seed.to_string());
                put("tau0", format!("{tau0:?}"));
                put("energy", format!("{energy:?}"));
            }
            InitialCondition::FromSnapshot { path } => {
                put("init", "from_snapshot".into());
                put("snapshot", path.display().to_string());
            }
        }
        match &self.magnetic {
            MagneticInit::None => put("magnetic", "none".into()),
            MagneticInit::Aligned => put("magnetic", "aligned".into()),
            MagneticInit::RandomAnalytic { seed, energy } => {
                put("magnetic", "random_analytic".into());
                put("magnetic_seed", seed.to_string());
                put("magnetic_energy", format!("{energy:?}"));
            }
        }
        put("hm_orders", join(&self.hm_orders.iter().map(|m| format!("{m:?}")).collect::<Vec<_>>()));
        put(
            "radius_window",
            match self.radius_window {
                RadiusWindow::Off => "off".into(),
                RadiusWindow::Auto => "auto".into(),
                RadiusWindow::Fixed { min_shell, max_shell } => format!("{min_shell}..{max_shell}"),
            },
        );
        put("alphas", join(&self.alphas.iter().map(|a| format!("{a:?}")).collect::<Vec<_>>()));
        put("n_list", join(&self.n_list));
        put("growth_margin", format!("{:?}", self.growth_margin));
        put("resolution_check", self.resolution_check.to_string());
        put("output_dir", self.output_dir.display().to_string());
        out
    }

    /// Whether the output directory may be written: absent, empty, or `force`.
    pub fn output_dir_available(&self, force: bool) -> bool {
        force || dir_is_empty(&self.output_dir)
    }
}

fn dir_is_empty(p: &Path) -> bool {
    match std::fs::read_dir(p) {
        Ok(mut it) => it.next().is_none(),
        Err(_) => !p.exists(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse_config("# nothing but a comment\n\n").unwrap();
        assert_eq!((c.dim, c.n, c.rhs), (3, 32, RhsKind::Voigt));
        assert_eq!(c.init, InitialCondition::RandomAnalytic { seed: 0, tau0: 0.1, energy: 0.5 });
        assert_eq!(c.alphas, vec![0.1, 0.05, 0.025, 0.0125]);
    }

    #[test]
    fn odd_n_is_rejected_with_line() {
        let e = parse_config("dim = 2\nn = 7\n").unwrap_err();
        assert_eq!(e.0.len(), 1);
        assert_eq!(e.0[0].line, 2);
        assert_eq!(e.0[0].kind, ConfigErrorKind::Constraint);
        assert!(e.0[0].message.contains("n must be even"));
    }

    #[test]
    fn reports_every_error() {
        let e = parse_config("n = 16\nn = 16\nbogus = 1\nalpha = abc\nalphas = 0.1, 0.2\nnot a pair\n").unwrap_err();
        let kinds: Vec<_> = e.0.iter().map(|e| (e.line, e.kind)).collect();
        assert_eq!(
            kinds,
            vec![
                (2, ConfigErrorKind::Duplicate),
                (3, ConfigErrorKind::UnknownKey),
                (4, ConfigErrorKind::TypeMismatch),
                (5, ConfigErrorKind::Constraint),
                (6, ConfigErrorKind::Syntax),
            ]
        );
    }

    #[test]
    fn overrides_replace_values() {
        let c = parse_config_with("n = 16 # inline comment\n", &["n=8".into(), "dim = 2".into()]).unwrap();
        assert_eq!((c.dim, c.n), (2, 8));
        let e = parse_config_with("", &["nn=8".into()]).unwrap_err();
        assert_eq!(e.0[0].line, 0);
    }

    #[test]
    fn magnetic_consistency() {
        assert!(parse_config("rhs = mhd_voigt\n").is_err());
        let c = parse_config("rhs = mhd_voigt\nmagnetic = random_analytic\nseed = 4\n").unwrap();
        assert_eq!(c.magnetic, MagneticInit::RandomAnalytic { seed: 5, energy: 0.5 });
        assert!(parse_config("magnetic = aligned\n").is_err());
    }

    #[test]
    fn missing_snapshot_is_a_constraint_error() {
        let e = parse_config("init = from_snapshot\nsnapshot = /definitely/not/here.bin\n").unwrap_err();
        assert_eq!(e.0[0].key, "snapshot");
    }

    #[test]
    fn canonical_text_round_trips() {
        let c = parse_config("dim = 2\nn = 16\nseed = 9\nradius_window = 2..6\nalpha = 0.3\n").unwrap();
        assert_eq!(parse_config(&c.to_text()).unwrap(), c);
    }
}
