//! Sobolev and Gevrey norms evaluated as Fourier sums.

use serde::{Deserialize, Serialize};

use super::field::SpectralField;
use super::grid::Mode;
use crate::error::{Error, Result};
use crate::scalar::{two_pi, Real};

/// Which Fourier-weighted norm to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum NormSpec {
    /// `(Σ (1+(2π|k|)²)^m |û_k|²)^{1/2}`
    Sobolev { m: f64 },
    /// `(Σ (2π|k|)^{2m} |û_k|²)^{1/2}`
    Seminorm { m: f64 },
    /// `(Σ (2π|k|)^{2r} e^{2τ 2π|k|} |û_k|²)^{1/2}`, i.e. `|A^{r/2} e^{τA^{1/2}} u|`
    Gevrey { r: f64, tau: f64 },
}

impl NormSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            NormSpec::Sobolev { m } | NormSpec::Seminorm { m } => m >= 0.0 && m.is_finite(),
            NormSpec::Gevrey { r, tau } => r >= 0.0 && tau >= 0.0 && r.is_finite() && tau.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("norm parameters must be finite and non-negative: {self:?}")))
        }
    }
}

fn mode_energy<T: Real>(field: &SpectralField<T>, m: &Mode) -> T {
    let mut s = T::zero();
    for c in 0..field.ncomp() {
        s = s + field.component(c)[m.index].norm_sqr();
    }
    T::of(m.weight) * s
}

/// Inhomogeneous `H^m` norm. `m = 0` gives the `L²` norm.
pub fn sobolev_norm<T: Real>(field: &SpectralField<T>, m: T) -> T {
    debug_assert!(m >= T::zero());
    let tp2 = two_pi::<T>() * two_pi::<T>();
    field
        .grid()
        .modes()
        .map(|md| {
            let lam = tp2 * T::of(md.k_squared() as f64);
            (T::one() + lam).powf(m) * mode_energy(field, &md)
        })
        .sum::<T>()
        .sqrt()
}

/// Homogeneous seminorm `|A^{m/2} u|`; the mean mode contributes nothing.
pub fn sobolev_seminorm<T: Real>(field: &SpectralField<T>, m: T) -> T {
    debug_assert!(m >= T::zero());
    let tp2 = two_pi::<T>() * two_pi::<T>();
    field
        .grid()
        .modes()
        .filter(|md| md.k_squared() != 0)
        .map(|md| {
            let lam = tp2 * T::of(md.k_squared() as f64);
            lam.powf(m) * mode_energy(field, &md)
        })
        .sum::<T>()
        .sqrt()
}

/// Result of a Gevrey norm evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GevreyNorm<T> {
    /// Norm value, clamped to `exp(GEVREY_LOG_BOUND)` when saturated.
    pub value: T,
    /// Natural logarithm of the unclamped norm (`-inf` for the zero field).
    pub log_value: f64,
    pub saturated: bool,
}

/// Exponent bound used to clamp Gevrey norms; well inside `f32` range.
pub const GEVREY_LOG_BOUND: f64 = 80.0;

/// Gevrey norm `|A^{r/2} e^{τA^{1/2}} u|`, summed in log space so that large
/// `τ|k|` never overflows. Values beyond `exp(GEVREY_LOG_BOUND)` saturate.
pub fn gevrey_norm<T: Real>(field: &SpectralField<T>, r: f64, tau: f64) -> GevreyNorm<T> {
    debug_assert!(r >= 0.0 && tau >= 0.0);
    let tp = std::f64::consts::TAU;
    let logs: Vec<f64> = field
        .grid()
        .modes()
        .filter(|md| md.k_squared() != 0)
        .filter_map(|md| {
            let e = mode_energy(field, &md).to_f64();
            if e <= 0.0 {
                return None;
            }
            let kappa = md.k_norm();
            Some(2.0 * r * (tp * kappa).ln() + 2.0 * tau * tp * kappa + e.ln())
        })
        .collect();
    if logs.is_empty() {
        return GevreyNorm {
            value: T::zero(),
            log_value: f64::NEG_INFINITY,
            saturated: false,
        };
    }
    let peak = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = peak + logs.iter().map(|l| (l - peak).exp()).sum::<f64>().ln();
    let log_value = 0.5 * lse;
    let saturated = log_value > GEVREY_LOG_BOUND;
    GevreyNorm {
        value: T::of(log_value.min(GEVREY_LOG_BOUND).exp()),
        log_value,
        saturated,
    }
}

/// Evaluates any [`NormSpec`].
pub fn norm<T: Real>(field: &SpectralField<T>, spec: NormSpec) -> T {
    match spec {
        NormSpec::Sobolev { m } => sobolev_norm(field, T::of(m)),
        NormSpec::Seminorm { m } => sobolev_seminorm(field, T::of(m)),
        NormSpec::Gevrey { r, tau } => gevrey_norm(field, r, tau).value,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::{random_field, taylor_green};
    use crate::spectral::{GridSpec, Transform};
    use num_complex::Complex;
    use std::f64::consts::PI;

    #[test]
    fn taylor_green_closed_forms() {
        let g = GridSpec::new(2, 16).unwrap();
        let u = taylor_green::<f64>(g);
        assert!((sobolev_norm(&u, 0.0).powi(2) - 0.5).abs() < 1e-14);
        assert!((sobolev_seminorm(&u, 1.0).powi(2) - 4.0 * PI * PI).abs() < 1e-12);
        let z = SpectralField::<f64>::zeros_vector(g);
        assert_eq!(sobolev_norm(&z, 2.0), 0.0);
        assert_eq!(gevrey_norm(&z, 1.0, 0.1).value, 0.0);
    }

    #[test]
    fn parseval() {
        let g = GridSpec::new(3, 16).unwrap();
        let u = random_field::<f64>(g, 3, 42);
        let p = Transform::new(g).to_physical(&u).unwrap();
        let spectral = sobolev_norm(&u, 0.0).powi(2);
        assert!((spectral - p.mean_square()).abs() <= 1e-12 * spectral);
    }

    #[test]
    fn gevrey_reduces_to_seminorm() {
        let g = GridSpec::new(3, 8).unwrap();
        let u = random_field::<f64>(g, 3, 1);
        let gv = gevrey_norm(&u, 1.5, 0.0);
        assert!(!gv.saturated);
        assert!((gv.value - sobolev_seminorm(&u, 1.5)).abs() < 1e-12 * gv.value);
        let l2 = gevrey_norm(&u, 0.0, 0.0).value;
        assert!((l2 - sobolev_norm(&u, 0.0)).abs() < 1e-12 * l2);
    }

    #[test]
    fn gevrey_single_mode() {
        let g = GridSpec::new(2, 8).unwrap();
        let mut u = SpectralField::<f64>::zeros_vector(g);
        u.set_mode(&[0, 1], &[Complex::new(0.3, 0.4), Complex::new(0.0, 0.0)]).unwrap();
        let tau = 0.2;
        // mode and conjugate partner: |û| = 0.5 each
        let expected = (2.0f64).sqrt() * 0.5 * (2.0 * PI * tau).exp();
        assert!((gevrey_norm(&u, 0.0, tau).value - expected).abs() < 1e-14);
    }

    #[test]
    fn gevrey_saturates() {
        let g = GridSpec::new(2, 8).unwrap();
        let u = random_field::<f64>(g, 2, 9);
        let gv = gevrey_norm(&u, 0.0, 50.0);
        assert!(gv.saturated);
        assert!(gv.value.is_finite());
        assert!(gv.log_value > GEVREY_LOG_BOUND);
    }

    #[test]
    fn norm_spec_validation() {
        assert!(NormSpec::Sobolev { m: -1.0 }.validate().is_err());
        assert!(NormSpec::Gevrey { r: 1.0, tau: 0.1 }.validate().is_ok());
    }
}
