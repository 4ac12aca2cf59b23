use serde::{Deserialize, Serialize};

use super::radius::{estimate_radius, FitWindow};
use crate::dynamics::{SimState, VoigtParams};
use crate::scalar::Real;
use crate::spectral::{sobolev_norm, sobolev_seminorm, SpectralField};

/// Monitored quantities at one instant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub time: f64,
    /// `|u|² + α²‖∇u‖²`
    pub modified_energy: f64,
    /// `|u|²`
    pub kinetic_energy: f64,
    /// `(m, ‖u‖_{H^m})` for each requested order.
    pub hm_norms: Vec<(f64, f64)>,
    /// `α²‖∇u‖²`
    pub blowup_indicator: f64,
    pub tau_estimate: Option<f64>,
    /// `α²‖∇u‖² + α_M²‖∇𝓑‖² + |u|² + |𝓑|²` for MHD states.
    pub mhd_energy: Option<f64>,
}

impl DiagnosticsRecord {
    /// The quantity the dynamics conserves: the MHD energy when present, else the modified energy.
    pub fn conserved(&self) -> f64 {
        self.mhd_energy.unwrap_or(self.modified_energy)
    }

    pub fn hm_norm(&self, m: f64) -> Option<f64> {
        self.hm_norms.iter().find(|(o, _)| (o - m).abs() < 1e-12).map(|&(_, v)| v)
    }
}

/// Which optional diagnostics to evaluate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSpec {
    pub hm_orders: Vec<f64>,
    /// Shell window for the analyticity-radius fit; `None` skips the fit.
    pub radius_window: Option<FitWindow>,
}

impl Default for DiagnosticsSpec {
    fn default() -> Self {
        Self {
            hm_orders: vec![1.0, 2.0, 3.0],
            radius_window: None,
        }
    }
}

/// `|u|² + α²‖∇u‖²`.
pub fn modified_energy<T: Real>(u: &SpectralField<T>, alpha: T) -> T {
    let grad = sobolev_seminorm(u, T::one());
    u.norm_sq() + alpha * alpha * grad * grad
}

/// `α²‖∇u‖² + α_M²‖∇𝓑‖² + |u|² + |𝓑|²`; the magnetic part is absent without `𝓑`.
pub fn mhd_modified_energy<T: Real>(state: &SimState<T>, params: &VoigtParams<T>) -> T {
    let mut e = modified_energy(&state.u, params.alpha);
    if let Some(b) = &state.b {
        e = e + modified_energy(b, params.alpha_m);
    }
    e
}

/// Evaluates a record for `state`.
pub fn record<T: Real>(state: &SimState<T>, params: &VoigtParams<T>, spec: &DiagnosticsSpec) -> DiagnosticsRecord {
    let u = &state.u;
    let kinetic = u.norm_sq().to_f64();
    let grad = sobolev_seminorm(u, T::one()).to_f64();
    let alpha = params.alpha.to_f64();
    let indicator = alpha * alpha * grad * grad;
    DiagnosticsRecord {
        time: state.time,
        modified_energy: kinetic + indicator,
        kinetic_energy: kinetic,
        hm_norms: spec
            .hm_orders
            .iter()
            .map(|&m| (m, sobolev_norm(u, T::of(m)).to_f64()))
            .collect(),
        blowup_indicator: indicator,
        tau_estimate: spec
            .radius_window
            .and_then(|w| estimate_radius(u, w).ok())
            .and_then(|fit| fit.conclusive().then_some(fit.tau)),
        mhd_energy: state.b.as_ref().map(|_| mhd_modified_energy(state, params).to_f64()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::taylor_green;
    use crate::spectral::GridSpec;

    #[test]
    fn taylor_green_energies() {
        let g = GridSpec::new(2, 16).unwrap();
        let u = taylor_green::<f64>(g);
        let e = modified_energy(&u, 0.1);
        assert!((e - 0.894784176043574).abs() < 1e-12, "{e}");
        assert!((modified_energy(&u, 0.0) - 0.5).abs() < 1e-14);

        let p = VoigtParams::new(0.1, 0.1).unwrap();
        let s = SimState::with_magnetic(u.clone(), u.clone());
        assert!((mhd_modified_energy(&s, &p) - 2.0 * e).abs() < 1e-12);
        let z = SimState::with_magnetic(SpectralField::zeros_vector(g), SpectralField::zeros_vector(g));
        assert_eq!(mhd_modified_energy(&z, &p), 0.0);

        let r = record(&SimState::new(u), &p, &DiagnosticsSpec::default());
        assert!((r.blowup_indicator - 0.01 * 4.0 * std::f64::consts::PI.powi(2)).abs() < 1e-12);
        assert_eq!(r.hm_norms.len(), 3);
        assert!(r.mhd_energy.is_none());
    }
}
