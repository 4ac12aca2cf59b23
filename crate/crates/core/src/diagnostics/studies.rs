//! Multi-run studies: `α → 0` convergence, the blow-up indicator sweep,
//! the Galerkin Cauchy test and the analyticity-radius series.

use std::thread;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::radius::{estimate_radius, linear_fit, FitWindow, RadiusFit};
use super::record::{modified_energy, DiagnosticsRecord, DiagnosticsSpec};
use crate::dynamics::{RhsKind, SimState, VoigtParams};
use crate::error::Error;
use crate::integrate::{integrate, IntegrationError, IntegratorConfig, Method, DEFAULT_DRIFT_BUDGET};
use crate::scalar::Real;
use crate::spectral::{sobolev_seminorm, GridSpec, SpectralField};

#[derive(Debug, Error)]
pub enum StudyError {
    #[error(transparent)]
    Config(#[from] Error),
    #[error("run with alpha = {alpha} failed at t = {time}: {message}")]
    RunFailed { alpha: f64, time: f64, message: String },
    /// The Euler reference left its smooth interval; rows computed so far are kept.
    #[error("reference run failed at t = {time}: {message}")]
    ReferenceFailed {
        time: f64,
        message: String,
        report: Box<ConvergenceReport>,
    },
}

/// Shared settings for the sweep drivers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Grid size per axis; the datum is resampled onto it.
    pub n: usize,
    pub dt: f64,
    pub t_end: f64,
    pub method: Method,
    /// Steps between time samples.
    pub sample_stride: usize,
    pub drift_budget: f64,
    /// Re-run the smallest α at `2n` and compare the indicator.
    pub resolution_check: bool,
    /// Largest relative indicator change between `n` and `2n` before the sweep is inconclusive.
    pub resolution_tolerance: f64,
    /// Noise floor = this factor × the smallest-α run's absolute energy drift.
    pub noise_factor: f64,
    /// Fraction of the smallest-α indicator the extrapolated limit must carry to count as persistent.
    pub persistence_fraction: f64,
}

impl SweepConfig {
    pub fn new(n: usize, dt: f64, t_end: f64) -> Self {
        Self {
            n,
            dt,
            t_end,
            method: Method::Rk4,
            sample_stride: 100,
            drift_budget: DEFAULT_DRIFT_BUDGET,
            resolution_check: true,
            resolution_tolerance: 0.2,
            noise_factor: 10.0,
            persistence_fraction: 0.5,
        }
    }

    fn integrator(&self, dt: f64, t_end: f64) -> IntegratorConfig {
        IntegratorConfig::new(dt, t_end)
            .with_budget(self.drift_budget)
            .with_stride(self.sample_stride.max(1))
            .with_diagnostics(DiagnosticsSpec {
                hm_orders: vec![],
                radius_window: None,
            })
    }
}

fn validate_alphas(alphas: &[f64], min_len: usize) -> Result<(), Error> {
    if alphas.len() < min_len {
        return Err(Error::Config(format!("need at least {min_len} alpha values, got {}", alphas.len())));
    }
    if alphas.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
        return Err(Error::Config("alpha values must be positive and finite".into()));
    }
    if alphas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config("alpha values must be strictly decreasing".into()));
    }
    Ok(())
}

fn prepare<T: Real>(u_in: &SpectralField<T>, n: usize) -> Result<SpectralField<T>, Error> {
    let grid = GridSpec::new(u_in.grid().dim(), n)?;
    let u = u_in.resample(grid)?;
    crate::dynamics::require_solenoidal("initial datum", &u)?;
    Ok(u)
}

/// Runs `f` over `items` on up to `available_parallelism` threads and returns
/// the results in input order.
fn dispatch<I: Sync, R: Send>(items: &[I], f: impl Fn(&I) -> R + Sync) -> Vec<R> {
    let workers = thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(items.len());
    if workers <= 1 {
        return items.iter().map(&f).collect();
    }
    let mut out: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    let f = &f;
    for chunk in items.chunks(workers).zip(out.chunks_mut(workers)) {
        thread::scope(|s| {
            let handles: Vec<_> = chunk.0.iter().map(|it| s.spawn(move || f(it))).collect();
            for (slot, h) in chunk.1.iter_mut().zip(handles) {
                *slot = Some(h.join().expect("worker panicked"));
            }
        });
    }
    out.into_iter().map(|r| r.expect("filled")).collect()
}

fn run_failed<T: Real>(alpha: f64, e: IntegrationError<T>) -> StudyError {
    let time = match &e {
        IntegrationError::BlowUp { time, .. } | IntegrationError::DriftExceeded { time, .. } => *time,
        IntegrationError::Model(_) => f64::NAN,
    };
    StudyError::RunFailed {
        alpha,
        time,
        message: e.to_string(),
    }
}

/// Samples a run at the start, every `stride` steps and at the end, keeping
/// the full state at each sample.
fn sampled_run<T: Real>(
    state: &SimState<T>,
    params: &VoigtParams<T>,
    kind: RhsKind,
    cfg: &IntegratorConfig,
) -> Result<Vec<SimState<T>>, IntegrationError<T>> {
    let t0 = state.time;
    let nsteps = cfg.steps(t0);
    let stride = cfg.callback_stride.max(1);
    let mut out = vec![state.clone()];
    let mut done = 0;
    while done < nsteps {
        let next = (done + stride).min(nsteps);
        let t_end = if next == nsteps { cfg.t_end } else { t0 + next as f64 * cfg.dt };
        let seg = IntegratorConfig {
            t_end,
            ..cfg.clone()
        };
        let s = integrate(out.last().expect("non-empty"), params, kind, &seg, &mut crate::integrate::NullSink)?;
        out.push(s.state);
        done = next;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub alpha: f64,
    /// `|u_α(T) - u(T)|_{L²}`
    pub l2_error: f64,
    /// `(|e|² + α²‖∇e‖²)^{1/2}` with `e = u_α(T) - u(T)`.
    pub modified_error: f64,
    /// `modified_error² / α²`
    pub k_estimate: f64,
    pub max_relative_drift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub t_end: f64,
    pub n: usize,
    pub dt: f64,
    pub rows: Vec<ConvergenceRow>,
    /// Slope of `log l2_error` against `log α`; `None` when fewer than two
    /// non-zero errors are available.
    pub slope: Option<f64>,
    /// `|u_dt(T) - u_{dt/2}(T)|_{L²}` for the reference run.
    pub reference_time_error: f64,
    /// Time error of the reference exceeds a tenth of the smallest error.
    pub time_error_dominates: bool,
    /// Ratio of `k_estimate` at the two smallest α.
    pub k_ratio: Option<f64>,
    pub degenerate: bool,
}

/// Compares Voigt runs for each α against the Euler run from the same datum.
pub fn convergence_study<T: Real>(
    u_in: &SpectralField<T>,
    alphas: &[f64],
    cfg: &SweepConfig,
) -> Result<ConvergenceReport, StudyError> {
    validate_alphas(alphas, 1)?;
    let u = prepare(u_in, cfg.n)?;
    let start = SimState::new(u);
    let euler = VoigtParams::euler();
    let mut report = ConvergenceReport {
        t_end: cfg.t_end,
        n: cfg.n,
        dt: cfg.dt,
        rows: vec![],
        slope: None,
        reference_time_error: f64::NAN,
        time_error_dominates: false,
        k_ratio: None,
        degenerate: alphas.len() < 2,
    };
    let refs = dispatch(&[cfg.dt, 0.5 * cfg.dt], |&dt| {
        integrate(&start, &euler, RhsKind::Euler, &cfg.integrator(dt, cfg.t_end), &mut crate::integrate::NullSink)
    });
    let mut reference = Vec::new();
    for r in refs {
        match r {
            Ok(s) => reference.push(s.state.u),
            Err(e) => {
                let time = match &e {
                    IntegrationError::BlowUp { time, .. } | IntegrationError::DriftExceeded { time, .. } => *time,
                    IntegrationError::Model(_) => f64::NAN,
                };
                return Err(StudyError::ReferenceFailed {
                    time,
                    message: e.to_string(),
                    report: Box::new(report),
                });
            }
        }
    }
    report.reference_time_error = reference[0].sub(&reference[1]).norm_sq().to_f64().sqrt();
    let reference = &reference[0];

    let runs = dispatch(alphas, |&a| {
        let p = VoigtParams::new(T::of(a), T::zero())?;
        integrate(&start, &p, RhsKind::Voigt, &cfg.integrator(cfg.dt, cfg.t_end), &mut crate::integrate::NullSink)
            .map_err(|e| run_failed(a, e))
    });
    for (&a, run) in alphas.iter().zip(runs) {
        let run = run?;
        let e = run.state.u.sub(reference);
        let l2 = e.norm_sq().to_f64().sqrt();
        let modified = modified_energy(&e, T::of(a)).to_f64().sqrt();
        report.rows.push(ConvergenceRow {
            alpha: a,
            l2_error: l2,
            modified_error: modified,
            k_estimate: modified * modified / (a * a),
            max_relative_drift: run.max_relative_drift,
        });
    }
    let usable: Vec<&ConvergenceRow> = report.rows.iter().filter(|r| r.l2_error > 0.0).collect();
    if usable.len() >= 2 {
        let x: Vec<f64> = usable.iter().map(|r| r.alpha.ln()).collect();
        let y: Vec<f64> = usable.iter().map(|r| r.l2_error.ln()).collect();
        report.slope = Some(linear_fit(&x, &y).1);
    } else {
        report.degenerate = true;
    }
    if usable.len() >= 2 {
        let k = &usable[usable.len() - 2..];
        report.k_ratio = Some(k[1].k_estimate / k[0].k_estimate);
    }
    let smallest = report.rows.iter().map(|r| r.l2_error).fold(f64::INFINITY, f64::min);
    report.time_error_dominates = smallest > 0.0 && report.reference_time_error > 0.1 * smallest;
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowupVerdict {
    SuggestsSingularity,
    ConsistentWithRegularity,
    Inconclusive,
}

impl std::fmt::Display for BlowupVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::SuggestsSingularity => "suggests_singularity",
            Self::ConsistentWithRegularity => "consistent_with_regularity",
            Self::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub alphas: Vec<f64>,
    pub times: Vec<f64>,
    /// `indicator[i][j] = α_i² ‖∇u_{α_i}(t_j)‖²`
    pub indicator: Vec<Vec<f64>>,
    /// Limit `a(t_j)` of the fit `a + b α²` over the three smallest α.
    pub extrapolated: Vec<f64>,
    pub slope_b: Vec<f64>,
    pub noise_floor: f64,
    /// No extrapolated limit lies below `-noise_floor`; a negative limit of a
    /// non-negative quantity means the `a + bα²` model does not fit.
    pub model_consistent: bool,
    /// Per run: `max_t |E(t) - E(0)| / E(0)` with `E = |u|² + α²‖∇u‖²`.
    pub identity_drift: Vec<f64>,
    pub identity_holds: bool,
    /// Largest relative change of the smallest-α indicator between `n` and `2n`.
    pub resolution_variation: Option<f64>,
    pub verdict: BlowupVerdict,
    pub reason: String,
}

/// Sweeps α, records `α²‖∇u_α(t)‖²` and extrapolates it to `α → 0`.
pub fn blowup_sweep<T: Real>(
    u_in: &SpectralField<T>,
    alphas: &[f64],
    cfg: &SweepConfig,
) -> Result<BlowupReport, StudyError> {
    validate_alphas(alphas, 4)?;
    let u = prepare(u_in, cfg.n)?;
    let start = SimState::new(u);
    let runs = dispatch(alphas, |&a| -> Result<Vec<DiagnosticsRecord>, StudyError> {
        let p = VoigtParams::new(T::of(a), T::zero())?;
        let mut recs = Vec::new();
        integrate(&start, &p, RhsKind::Voigt, &cfg.integrator(cfg.dt, cfg.t_end), &mut recs)
            .map_err(|e| run_failed(a, e))?;
        Ok(recs)
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>, _>>()?;
    let times: Vec<f64> = runs[0].iter().map(|r| r.time).collect();
    let indicator: Vec<Vec<f64>> = runs
        .iter()
        .map(|recs| recs.iter().map(|r| r.blowup_indicator).collect())
        .collect();
    let identity_drift: Vec<f64> = runs
        .iter()
        .map(|recs| {
            let e0 = recs[0].modified_energy;
            recs.iter().map(|r| (r.modified_energy - e0).abs()).fold(0.0, f64::max) / e0.max(f64::MIN_POSITIVE)
        })
        .collect();
    let identity_holds = identity_drift
        .iter()
        .all(|d| *d <= cfg.drift_budget * cfg.t_end.abs().max(1.0));

    let last = runs.len() - 1;
    let e0 = runs[last][0].modified_energy;
    let noise_floor = cfg.noise_factor * identity_drift[last] * e0;

    let fit_rows = &indicator[last - 2..];
    let x: Vec<f64> = alphas[last - 2..].iter().map(|a| a * a).collect();
    let mut extrapolated = Vec::with_capacity(times.len());
    let mut slope_b = Vec::with_capacity(times.len());
    let mut singular_at = None;
    for j in 0..times.len() {
        let y: Vec<f64> = fit_rows.iter().map(|row| row[j]).collect();
        let (a, b, _, _) = linear_fit(&x, &y);
        extrapolated.push(a);
        slope_b.push(b);
        let persistent = a >= cfg.persistence_fraction * indicator[last][j];
        if a > noise_floor && persistent && singular_at.is_none() {
            singular_at = Some(times[j]);
        }
    }

    let mut resolution_variation = None;
    if cfg.resolution_check {
        let fine = SimState::new(prepare(u_in, 2 * cfg.n)?);
        let a = alphas[last];
        let p = VoigtParams::new(T::of(a), T::zero()).map_err(StudyError::from)?;
        let mut recs = Vec::new();
        integrate(&fine, &p, RhsKind::Voigt, &cfg.integrator(cfg.dt, cfg.t_end), &mut recs)
            .map_err(|e| run_failed(a, e))?;
        let var = recs
            .iter()
            .zip(&indicator[last])
            .map(|(r, &coarse)| {
                let scale = r.blowup_indicator.abs().max(coarse.abs());
                if scale > 0.0 {
                    (r.blowup_indicator - coarse).abs() / scale
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max);
        resolution_variation = Some(var);
    }

    let (verdict, reason) = match (resolution_variation, singular_at) {
        (Some(v), _) if v > cfg.resolution_tolerance => (
            BlowupVerdict::Inconclusive,
            format!("indicator changes by {:.1}% between n and 2n", 100.0 * v),
        ),
        (_, Some(t)) => (
            BlowupVerdict::SuggestsSingularity,
            format!("extrapolated limit exceeds the noise floor {noise_floor:.3e} from t = {t}"),
        ),
        _ if !identity_holds => (
            BlowupVerdict::Inconclusive,
            "modified-energy identity violated beyond the drift budget".to_string(),
        ),
        _ => (
            BlowupVerdict::ConsistentWithRegularity,
            format!("extrapolated limit stays below the noise floor {noise_floor:.3e} or vanishes with α²"),
        ),
    };
    let model_consistent = extrapolated.iter().all(|a| *a >= -noise_floor);
    Ok(BlowupReport {
        model_consistent,
        alphas: alphas.to_vec(),
        times,
        indicator,
        extrapolated,
        slope_b,
        noise_floor,
        identity_drift,
        identity_holds,
        resolution_variation,
        verdict,
        reason,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauchyReport {
    pub alpha: f64,
    pub t_end: f64,
    /// `(N, max_t ‖∇(u_N - u_{2N})(t)‖)`
    pub rows: Vec<(usize, f64)>,
    pub strictly_decreasing: bool,
    pub degenerate: bool,
}

/// Runs the Galerkin truncations `P_N u_in` and `P_{2N} u_in` for each `N` and
/// reports `sup_t ‖∇(u_N - u_{2N})‖` over the sample times.
pub fn galerkin_cauchy_test<T: Real>(
    u_in: &SpectralField<T>,
    n_list: &[usize],
    alpha: f64,
    cfg: &SweepConfig,
) -> Result<CauchyReport, StudyError> {
    if n_list.is_empty() {
        return Err(Error::Config("galerkin_cauchy_test needs at least one resolution".into()).into());
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("resolutions must be strictly increasing".into()).into());
    }
    let mut grids: Vec<usize> = n_list.iter().flat_map(|&n| [n, 2 * n]).collect();
    grids.sort_unstable();
    grids.dedup();
    let p = VoigtParams::new(T::of(alpha), T::zero())?;
    let runs = dispatch(&grids, |&n| -> Result<Vec<SimState<T>>, StudyError> {
        let u = prepare(u_in, n)?;
        sampled_run(&SimState::new(u), &p, RhsKind::Voigt, &cfg.integrator(cfg.dt, cfg.t_end))
            .map_err(|e| run_failed(alpha, e))
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>, _>>()?;
    let find = |n: usize| &runs[grids.iter().position(|&g| g == n).expect("scheduled")];
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let (coarse, fine) = (find(n), find(2 * n));
        let mut worst: f64 = 0.0;
        for (a, b) in coarse.iter().zip(fine) {
            let up = a.u.resample(b.grid())?;
            worst = worst.max(sobolev_seminorm(&up.sub(&b.u), T::one()).to_f64());
        }
        rows.push((n, worst));
    }
    Ok(CauchyReport {
        alpha,
        t_end: cfg.t_end,
        strictly_decreasing: rows.len() >= 2 && rows.windows(2).all(|w| w[1].1 < w[0].1),
        degenerate: rows.len() < 2,
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusSeries {
    pub times: Vec<f64>,
    pub fits: Vec<RadiusFit>,
    /// Every increase `τ_{j+1} - τ_j` stays within two combined standard errors.
    pub non_increasing: bool,
}

/// Evolves `u_in` under the Voigt dynamics and fits the analyticity radius at each sample.
pub fn radius_series<T: Real>(
    u_in: &SpectralField<T>,
    alpha: f64,
    window: Option<FitWindow>,
    cfg: &SweepConfig,
) -> Result<RadiusSeries, StudyError> {
    let u = prepare(u_in, cfg.n)?;
    let window = window.unwrap_or_else(|| FitWindow::default_for(u.grid()));
    let p = VoigtParams::new(T::of(alpha), T::zero())?;
    let states = sampled_run(&SimState::new(u), &p, RhsKind::Voigt, &cfg.integrator(cfg.dt, cfg.t_end))
        .map_err(|e| run_failed(alpha, e))?;
    let mut fits = Vec::with_capacity(states.len());
    for s in &states {
        fits.push(estimate_radius(&s.u, window)?);
    }
    let tau_err = |f: &RadiusFit| {
        // τ = -slope / 2π
        f.slope_std_error / std::f64::consts::TAU
    };
    let non_increasing = fits.windows(2).all(|w| {
        let noise = 2.0 * (tau_err(&w[0]).powi(2) + tau_err(&w[1]).powi(2)).sqrt();
        w[1].tau <= w[0].tau + noise
    });
    Ok(RadiusSeries {
        times: states.iter().map(|s| s.time).collect(),
        fits,
        non_increasing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::{random_analytic, taylor_green};

    #[test]
    fn taylor_green_converges_trivially() {
        let g = GridSpec::new(2, 16).unwrap();
        let u = taylor_green::<f64>(g);
        let cfg = SweepConfig::new(16, 0.01, 0.1);
        let r = convergence_study(&u, &[0.1, 0.05], &cfg).unwrap();
        assert!(r.rows.iter().all(|row| row.l2_error < 1e-13));
        let single = convergence_study(&u, &[0.1], &cfg).unwrap();
        assert!(single.degenerate && single.slope.is_none());
        assert!(convergence_study(&u, &[0.05, 0.1], &cfg).is_err());
    }

    #[test]
    fn taylor_green_sweep_extrapolates_to_zero() {
        let g = GridSpec::new(2, 16).unwrap();
        let u = taylor_green::<f64>(g);
        let mut cfg = SweepConfig::new(16, 0.01, 0.1);
        cfg.sample_stride = 5;
        let alphas = [0.1, 0.05, 0.025, 0.0125];
        let r = blowup_sweep(&u, &alphas, &cfg).unwrap();
        assert_eq!(r.times.len(), 3);
        for (i, a) in alphas.iter().enumerate() {
            let expect = a * a * 8.0 * std::f64::consts::PI.powi(2) * 0.5;
            for v in &r.indicator[i] {
                assert!((v - expect).abs() < 1e-12 * expect.max(1.0));
            }
        }
        assert!(r.extrapolated.iter().all(|a| a.abs() < 1e-12));
        assert_eq!(r.verdict, BlowupVerdict::ConsistentWithRegularity);
        assert!(blowup_sweep(&u, &alphas[..3], &cfg).is_err());
    }

    #[test]
    fn cauchy_on_taylor_green_vanishes() {
        let g = GridSpec::new(2, 16).unwrap();
        let u = taylor_green::<f64>(g);
        let mut cfg = SweepConfig::new(8, 0.01, 0.05);
        cfg.sample_stride = 2;
        let r = galerkin_cauchy_test(&u, &[8, 16], 0.1, &cfg).unwrap();
        assert!(r.rows.iter().all(|(_, d)| *d < 1e-12));
        assert!(galerkin_cauchy_test(&u, &[8], 0.1, &cfg).unwrap().degenerate);
    }

    #[test]
    fn small_random_sweep_runs() {
        let g = GridSpec::new(2, 16).unwrap();
        let u = random_analytic::<f64>(g, 4, 0.1, 0.5).unwrap();
        let mut cfg = SweepConfig::new(16, 0.005, 0.1);
        cfg.sample_stride = 10;
        let r = convergence_study(&u, &[0.1, 0.05, 0.025], &cfg).unwrap();
        assert!(r.rows.windows(2).all(|w| w[1].l2_error < w[0].l2_error), "{r:?}");
        assert!(r.slope.unwrap() > 0.0 && !r.time_error_dominates);
        let s = radius_series(&u, 0.1, Some(FitWindow { min_shell: 2, max_shell: 4 }), &cfg).unwrap();
        assert_eq!(s.fits.len(), 3);
    }
}
