//! Fixed-step explicit Runge-Kutta integration, forward or backward in time.
//!
//! The conserved (modified) energy is the error sensor: a run aborts as soon
//! as its relative drift exceeds `energy_drift_budget · max(1, |t - t₀|)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{mhd_modified_energy, record, DiagnosticsRecord, DiagnosticsSpec};
use crate::dynamics::{evaluate, Derivative, RhsKind, SimState, VoigtParams, Workspace};
use crate::error::Error;
use crate::scalar::Real;
use crate::spectral::leray_project_in_place;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Rk4,
    Rk2,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Rk4 => "rk4",
            Method::Rk2 => "rk2",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "rk4" => Ok(Method::Rk4),
            "rk2" => Ok(Method::Rk2),
            other => Err(Error::Config(format!("unknown method '{other}' (rk4, rk2)"))),
        }
    }
}

pub const DEFAULT_DRIFT_BUDGET: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Step size; negative for backward integration.
    pub dt: f64,
    pub t_end: f64,
    /// Relative drift of the conserved energy allowed per unit time.
    pub energy_drift_budget: f64,
    /// Steps between diagnostic records.
    pub callback_stride: usize,
    pub diagnostics: DiagnosticsSpec,
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            method: Method::Rk4,
            dt,
            t_end,
            energy_drift_budget: DEFAULT_DRIFT_BUDGET,
            callback_stride: 1,
            diagnostics: DiagnosticsSpec::default(),
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.callback_stride = stride;
        self
    }

    pub fn with_budget(mut self, budget: f64) -> Self {
        self.energy_drift_budget = budget;
        self
    }

    pub fn with_diagnostics(mut self, spec: DiagnosticsSpec) -> Self {
        self.diagnostics = spec;
        self
    }

    pub fn validate(&self, t_start: f64) -> Result<(), Error> {
        if self.dt == 0.0 || !self.dt.is_finite() {
            return Err(Error::Config("dt must be finite and non-zero".into()));
        }
        if !self.t_end.is_finite() {
            return Err(Error::Config("t_end must be finite".into()));
        }
        let span = self.t_end - t_start;
        if span != 0.0 && span.signum() != self.dt.signum() {
            return Err(Error::Config(format!(
                "dt = {} points away from t_end = {} (start {t_start})",
                self.dt, self.t_end
            )));
        }
        if self.callback_stride == 0 {
            return Err(Error::Config("callback_stride must be at least 1".into()));
        }
        if self.energy_drift_budget.is_nan() || self.energy_drift_budget <= 0.0 {
            return Err(Error::Config("energy_drift_budget must be positive".into()));
        }
        Ok(())
    }

    /// Number of steps to reach `t_end`; the last one is shortened if `dt` does not divide the span.
    pub fn steps(&self, t_start: f64) -> usize {
        let ratio = ((self.t_end - t_start) / self.dt).abs();
        (ratio - 1e-9).ceil().max(0.0) as usize
    }
}

#[derive(Debug, Error)]
pub enum IntegrationError<T: Real> {
    #[error("non-finite coefficients at t = {time}")]
    BlowUp { time: f64, last_finite: Box<SimState<T>> },
    #[error("energy drift {drift:e} exceeds the allowed {allowed:e} at t = {time}; reduce dt")]
    DriftExceeded {
        time: f64,
        drift: f64,
        allowed: f64,
        state: Box<SimState<T>>,
    },
    #[error(transparent)]
    Model(#[from] Error),
}

/// Receives diagnostic records as they are produced.
pub trait DiagnosticsSink {
    fn record(&mut self, rec: DiagnosticsRecord);
}

impl DiagnosticsSink for Vec<DiagnosticsRecord> {
    fn record(&mut self, rec: DiagnosticsRecord) {
        self.push(rec);
    }
}

/// Discards every record.
pub struct NullSink;

impl DiagnosticsSink for NullSink {
    fn record(&mut self, _rec: DiagnosticsRecord) {}
}

fn advanced<T: Real>(state: &SimState<T>, d: &Derivative<T>, h: f64) -> SimState<T> {
    let mut out = state.clone();
    out.u.axpy(T::of(h), &d.du);
    if let (Some(b), Some(db)) = (out.b.as_mut(), d.db.as_ref()) {
        b.axpy(T::of(h), db);
    }
    out.time = state.time + h;
    out
}

fn accumulate<T: Real>(state: &mut SimState<T>, d: &Derivative<T>, h: f64) {
    state.u.axpy(T::of(h), &d.du);
    if let (Some(b), Some(db)) = (state.b.as_mut(), d.db.as_ref()) {
        b.axpy(T::of(h), db);
    }
}

/// One explicit step of size `dt`.
pub fn step<T: Real>(
    ws: &mut Workspace<T>,
    state: &SimState<T>,
    params: &VoigtParams<T>,
    kind: RhsKind,
    dt: f64,
    method: Method,
) -> Result<SimState<T>, IntegrationError<T>> {
    if dt == 0.0 || !dt.is_finite() {
        return Err(Error::Config("step size must be finite and non-zero".into()).into());
    }
    let next = match method {
        Method::Rk4 => {
            let k1 = evaluate(ws, kind, state, params)?;
            let k2 = evaluate(ws, kind, &advanced(state, &k1, 0.5 * dt), params)?;
            let k3 = evaluate(ws, kind, &advanced(state, &k2, 0.5 * dt), params)?;
            let k4 = evaluate(ws, kind, &advanced(state, &k3, dt), params)?;
            let mut next = state.clone();
            accumulate(&mut next, &k1, dt / 6.0);
            accumulate(&mut next, &k2, dt / 3.0);
            accumulate(&mut next, &k3, dt / 3.0);
            accumulate(&mut next, &k4, dt / 6.0);
            next
        }
        Method::Rk2 => {
            let k1 = evaluate(ws, kind, state, params)?;
            let k2 = evaluate(ws, kind, &advanced(state, &k1, 0.5 * dt), params)?;
            let mut next = state.clone();
            accumulate(&mut next, &k2, dt);
            next
        }
    };
    let mut next = next;
    next.time = state.time + dt;
    // keep round-off from accumulating in the divergence
    leray_project_in_place(&mut next.u);
    if let Some(b) = next.b.as_mut() {
        leray_project_in_place(b);
    }
    if !next.is_finite() {
        return Err(IntegrationError::BlowUp {
            time: next.time,
            last_finite: Box::new(state.clone()),
        });
    }
    Ok(next)
}

/// Result of a completed run.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegrationSummary<T> {
    pub state: SimState<T>,
    pub steps: usize,
    /// Largest relative drift of the conserved energy seen during the run.
    pub max_relative_drift: f64,
}

fn conserved<T: Real>(state: &SimState<T>, params: &VoigtParams<T>) -> f64 {
    mhd_modified_energy(state, params).to_f64()
}

/// Integrates from `state.time` to `config.t_end`, emitting a record at the
/// start, every `callback_stride` steps, and at the end.
pub fn integrate<T: Real>(
    state: &SimState<T>,
    params: &VoigtParams<T>,
    kind: RhsKind,
    config: &IntegratorConfig,
    sink: &mut dyn DiagnosticsSink,
) -> Result<IntegrationSummary<T>, IntegrationError<T>> {
    params.validate()?;
    // the Euler flow conserves the plain kinetic energy
    let effective = if kind == RhsKind::Euler { VoigtParams::euler() } else { *params };
    let params = &effective;
    let t0 = state.time;
    config.validate(t0)?;
    let mut ws = Workspace::new(state.grid());
    let nsteps = config.steps(t0);
    let e0 = conserved(state, params);
    let scale = if e0 > 0.0 { e0 } else { 1.0 };
    let mut current = state.clone();
    let mut max_drift: f64 = 0.0;
    sink.record(record(&current, params, &config.diagnostics));
    for i in 1..=nsteps {
        let target = if i == nsteps { config.t_end } else { t0 + i as f64 * config.dt };
        let h = target - current.time;
        let mut next = step(&mut ws, &current, params, kind, h, config.method)?;
        next.time = target;
        let drift = (conserved(&next, params) - e0).abs() / scale;
        max_drift = max_drift.max(drift);
        let allowed = config.energy_drift_budget * (target - t0).abs().max(1.0);
        if drift > allowed {
            return Err(IntegrationError::DriftExceeded {
                time: target,
                drift,
                allowed,
                state: Box::new(next),
            });
        }
        current = next;
        if i % config.callback_stride == 0 || i == nsteps {
            sink.record(record(&current, params, &config.diagnostics));
        }
    }
    Ok(IntegrationSummary {
        state: current,
        steps: nsteps,
        max_relative_drift: max_drift,
    })
}

/// Integrates forward to `config.t_end` and back to the start time, returning
/// `|u_back - u₀|_{L²} / |u₀|_{L²}` (the magnetic field is included for MHD).
pub fn reversibility_check<T: Real>(
    state: &SimState<T>,
    params: &VoigtParams<T>,
    kind: RhsKind,
    config: &IntegratorConfig,
) -> Result<f64, IntegrationError<T>> {
    let forward = integrate(state, params, kind, config, &mut NullSink)?;
    let back_cfg = IntegratorConfig {
        dt: -config.dt,
        t_end: state.time,
        ..config.clone()
    };
    let back = integrate(&forward.state, params, kind, &back_cfg, &mut NullSink)?;
    let mut num = back.state.u.sub(&state.u).norm_sq();
    let mut den = state.u.norm_sq();
    if let (Some(b1), Some(b0)) = (&back.state.b, &state.b) {
        num = num + b1.sub(b0).norm_sq();
        den = den + b0.norm_sq();
    }
    let (num, den) = (num.to_f64().sqrt(), den.to_f64().sqrt());
    Ok(if den > 0.0 { num / den } else { num })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::{random_analytic, taylor_green};
    use crate::spectral::{GridSpec, SpectralField};

    #[test]
    fn taylor_green_is_a_fixed_point() {
        let g = GridSpec::new(2, 16).unwrap();
        let s = SimState::new(taylor_green::<f64>(g));
        let p = VoigtParams::new(0.1, 0.0).unwrap();
        let mut ws = Workspace::new(g);
        for dt in [1e-3, 0.1, -0.05] {
            let next = step(&mut ws, &s, &p, RhsKind::Voigt, dt, Method::Rk4).unwrap();
            assert!(next.u.sub(&s.u).max_abs() < 1e-13);
        }
        let mut recs = Vec::new();
        integrate(&s, &p, RhsKind::Voigt, &IntegratorConfig::new(0.01, 0.1), &mut recs).unwrap();
        assert_eq!(recs.len(), 11);
        for r in &recs {
            assert!((r.modified_energy - recs[0].modified_energy).abs() < 1e-14);
            assert!((r.hm_norms[1].1 - recs[0].hm_norms[1].1).abs() < 1e-12);
        }
    }

    #[test]
    fn mhd_alfvenic_state_is_fixed() {
        let g = GridSpec::new(3, 8).unwrap();
        let u = random_analytic::<f64>(g, 1, 0.1, 0.5).unwrap();
        let s = SimState::with_magnetic(u.clone(), u);
        let p = VoigtParams::new(0.1, 0.05).unwrap();
        let mut ws = Workspace::new(g);
        let next = step(&mut ws, &s, &p, RhsKind::MhdVoigt, 0.01, Method::Rk4).unwrap();
        assert!(next.u.sub(&s.u).max_abs() < 1e-15);
        assert!(next.b.as_ref().unwrap().sub(s.b.as_ref().unwrap()).max_abs() < 1e-15);
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = GridSpec::new(3, 8).unwrap();
        let s = SimState::new(SpectralField::<f64>::zeros_vector(g));
        let p = VoigtParams::new(0.1, 0.0).unwrap();
        let out = integrate(&s, &p, RhsKind::Voigt, &IntegratorConfig::new(0.01, 0.05), &mut NullSink).unwrap();
        assert_eq!(out.state.u.max_abs(), 0.0);
        assert_eq!(reversibility_check(&s, &p, RhsKind::Voigt, &IntegratorConfig::new(0.01, 0.05)).unwrap(), 0.0);
    }

    #[test]
    fn rk4_local_error_ratio() {
        // Richardson: |step(h) - 2 steps(h/2)| scales like h⁵ for a 4th-order method.
        let g = GridSpec::new(3, 16).unwrap();
        let s = SimState::new(random_analytic::<f64>(g, 3, 0.1, 0.5).unwrap());
        let p = VoigtParams::new(0.1, 0.0).unwrap();
        let mut ws = Workspace::new(g);
        let local = |ws: &mut Workspace<f64>, h: f64| {
            let one = step(ws, &s, &p, RhsKind::Voigt, h, Method::Rk4).unwrap();
            let half = step(ws, &s, &p, RhsKind::Voigt, h / 2.0, Method::Rk4).unwrap();
            let two = step(ws, &half, &p, RhsKind::Voigt, h / 2.0, Method::Rk4).unwrap();
            one.u.sub(&two.u).norm_sq().sqrt()
        };
        let e1 = local(&mut ws, 0.04);
        let e2 = local(&mut ws, 0.02);
        let ratio = e1 / e2;
        assert!((24.0..=40.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn rk2_is_second_order() {
        let g = GridSpec::new(2, 16).unwrap();
        let s = SimState::new(random_analytic::<f64>(g, 3, 0.1, 0.5).unwrap());
        let p = VoigtParams::new(0.1, 0.0).unwrap();
        let reference = {
            let cfg = IntegratorConfig::new(0.001, 0.2);
            integrate(&s, &p, RhsKind::Voigt, &cfg, &mut NullSink).unwrap().state
        };
        let err = |dt: f64| {
            let cfg = IntegratorConfig {
                method: Method::Rk2,
                ..IntegratorConfig::new(dt, 0.2).with_budget(1.0)
            };
            let out = integrate(&s, &p, RhsKind::Voigt, &cfg, &mut NullSink).unwrap();
            out.state.u.sub(&reference.u).norm_sq().sqrt()
        };
        let ratio = err(0.02) / err(0.01);
        assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn config_validation() {
        let s = SimState::new(SpectralField::<f64>::zeros_vector(GridSpec::new(2, 8).unwrap()));
        let p = VoigtParams::euler();
        let bad = IntegratorConfig::new(-0.1, 1.0);
        assert!(matches!(
            integrate(&s, &p, RhsKind::Euler, &bad, &mut NullSink),
            Err(IntegrationError::Model(Error::Config(_)))
        ));
        assert!(IntegratorConfig::new(0.0, 1.0).validate(0.0).is_err());
        assert_eq!(IntegratorConfig::new(0.3, 1.0).steps(0.0), 4);
        assert_eq!(IntegratorConfig::new(0.1, 1.0).steps(0.0), 10);
    }

    #[test]
    fn drift_budget_aborts_oversized_steps() {
        let g = GridSpec::new(2, 32).unwrap();
        let s = SimState::new(random_analytic::<f64>(g, 4, 0.02, 2.0).unwrap());
        let p = VoigtParams::new(0.05, 0.0).unwrap();
        let cfg = IntegratorConfig::new(0.05, 1.0);
        assert!(matches!(
            integrate(&s, &p, RhsKind::Voigt, &cfg, &mut NullSink),
            Err(IntegrationError::DriftExceeded { .. })
        ));
    }

    #[test]
    fn blow_up_is_reported_with_last_finite_state() {
        let g = GridSpec::new(2, 32).unwrap();
        let s = SimState::new(random_analytic::<f64>(g, 4, 0.0, 1e6).unwrap());
        let p = VoigtParams::euler();
        let mut ws = Workspace::new(g);
        let mut cur = s;
        let mut failure = None;
        for _ in 0..200 {
            match step(&mut ws, &cur, &p, RhsKind::Euler, 1.0, Method::Rk4) {
                Ok(next) => cur = next,
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            }
        }
        let err = failure.expect("an explicit step this large must overflow");
        match err {
            IntegrationError::BlowUp { last_finite, .. } => assert!(last_finite.is_finite()),
            other => panic!("unexpected {other:?}"),
        }
    }
}
