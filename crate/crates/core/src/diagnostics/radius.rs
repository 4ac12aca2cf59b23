//! Shell spectra and the analyticity-radius estimator.
//!
//! For a field in the Gevrey class with radius `τ`, coefficients decay like
//! `|û_k| ~ e^{-τ 2π|k|}`. The estimator fits `½ log ē_j = c - τ (2π κ_j)` where
//! `ē_j` is the mean modal energy of shell `j` and `κ_j` its mean wavenumber.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;
use crate::spectral::{GridSpec, SpectralField, Truncation};

/// Mean modal energies at or below this are ignored by the fit.
pub const SHELL_ENERGY_FLOOR: f64 = 1e-28;
/// Fewer usable shells than this makes the fit inconclusive.
pub const MIN_FIT_SHELLS: usize = 4;

/// Unit-width shell `j - ½ < |k| ≤ j + ½`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shell {
    pub index: usize,
    /// Mean `|k|` over the modes of the shell.
    pub radius: f64,
    /// `Σ_{k ∈ shell} |û_k|²`
    pub energy: f64,
    /// Number of full-spectrum modes in the shell.
    pub modes: f64,
}

impl Shell {
    pub fn mean_mode_energy(&self) -> f64 {
        if self.modes > 0.0 {
            self.energy / self.modes
        } else {
            0.0
        }
    }
}

/// Energy per unit-width shell; the shells partition `|u|²`.
pub fn spectrum_shells<T: Real>(u: &SpectralField<T>) -> Vec<Shell> {
    let g = u.grid();
    let mut shells: Vec<Shell> = Vec::new();
    for m in g.modes() {
        if m.nyquist {
            continue;
        }
        let kappa = m.k_norm();
        let j = (kappa - 0.5).ceil().max(0.0) as usize;
        if shells.len() <= j {
            shells.extend((shells.len()..=j).map(|index| Shell {
                index,
                radius: 0.0,
                energy: 0.0,
                modes: 0.0,
            }));
        }
        let e: f64 = (0..u.ncomp()).map(|c| u.component(c)[m.index].norm_sqr().to_f64()).sum();
        let s = &mut shells[j];
        s.energy += m.weight * e;
        s.radius += m.weight * kappa;
        s.modes += m.weight;
    }
    for s in &mut shells {
        if s.modes > 0.0 {
            s.radius /= s.modes;
        }
    }
    shells
}

/// Inclusive range of shell indices used by the fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitWindow {
    pub min_shell: usize,
    pub max_shell: usize,
}

impl FitWindow {
    /// Shells 3 through the two-thirds cutoff minus 2.
    pub fn default_for(grid: GridSpec) -> Self {
        let cutoff = Truncation::two_thirds_cutoff(grid).max(0) as usize;
        Self {
            min_shell: 3,
            max_shell: cutoff.saturating_sub(2).max(3),
        }
    }
}

/// Outcome of [`estimate_radius`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusFit {
    /// Estimated radius, clamped at zero.
    pub tau: f64,
    /// Unclamped fitted slope.
    pub slope: f64,
    /// Standard error of the slope.
    pub slope_std_error: f64,
    /// Coefficient of determination of the log-linear fit.
    pub fit_quality: f64,
    pub shells_used: usize,
    pub window: FitWindow,
    pub inconclusive: bool,
}

impl RadiusFit {
    pub fn conclusive(&self) -> bool {
        !self.inconclusive
    }
}

/// Ordinary least squares `y = a + b x`; returns `(a, b, r², std error of b)`.
pub(crate) fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - ssr / syy } else { 1.0 };
    let se = if x.len() > 2 && sxx > 0.0 {
        (ssr / (n - 2.0) / sxx).sqrt()
    } else {
        f64::INFINITY
    };
    (intercept, slope, r2, se)
}

/// Least-squares estimate of the analyticity radius from the shell spectrum.
pub fn estimate_radius<T: Real>(u: &SpectralField<T>, window: FitWindow) -> crate::Result<RadiusFit> {
    if window.min_shell > window.max_shell {
        return Err(crate::Error::Config(format!("empty fit window {window:?}")));
    }
    let shells = spectrum_shells(u);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for s in shells
        .iter()
        .filter(|s| s.index >= window.min_shell && s.index <= window.max_shell)
    {
        let e = s.mean_mode_energy();
        if e > SHELL_ENERGY_FLOOR {
            xs.push(-std::f64::consts::TAU * s.radius);
            ys.push(0.5 * e.ln());
        }
    }
    if xs.len() < MIN_FIT_SHELLS {
        return Ok(RadiusFit {
            tau: 0.0,
            slope: f64::NAN,
            slope_std_error: f64::INFINITY,
            fit_quality: 0.0,
            shells_used: xs.len(),
            window,
            inconclusive: true,
        });
    }
    let (_, slope, r2, se) = linear_fit(&xs, &ys);
    Ok(RadiusFit {
        tau: slope.max(0.0),
        slope,
        slope_std_error: se,
        fit_quality: r2,
        shells_used: xs.len(),
        window,
        inconclusive: false,
    })
}

/// Field whose coefficient vectors have modulus exactly `e^{-τ₀ 2π|k|}`, with random directions.
pub fn synthetic_exponential_field<T: Real>(grid: GridSpec, tau0: f64, seed: u64) -> SpectralField<T> {
    let mut f = crate::init::random_field::<T>(grid, grid.dim(), seed);
    crate::spectral::leray_project_in_place(&mut f);
    let tp = std::f64::consts::TAU;
    f.for_each_mode_mut(|m, v| {
        let norm: f64 = v.iter().map(|z| z.norm_sqr().to_f64()).sum::<f64>().sqrt();
        if norm > 0.0 {
            let s = T::of((-tau0 * tp * m.k_norm()).exp() / norm);
            v.iter_mut().for_each(|z| *z = *z * s);
        }
    });
    f
}
