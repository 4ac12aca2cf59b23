//! Linear operators that are diagonal in Fourier space.

use num_complex::Complex;

use super::field::SpectralField;
use super::grid::{GridSpec, Mode};
use crate::error::{Error, Result};
use crate::scalar::{two_pi, Real};

/// Eigenvalue of the Stokes operator `A = -Δ` on mode `k`: `(2π|k|)²`.
#[inline]
pub fn stokes_eigenvalue<T: Real>(m: &Mode) -> T {
    let tp = two_pi::<T>();
    tp * tp * T::of(m.k_squared() as f64)
}

/// Leray-Helmholtz projection `P(k) = I - k kᵀ/|k|²`; the mean mode is zeroed.
pub fn leray_project<T: Real>(field: &SpectralField<T>) -> SpectralField<T> {
    let mut out = field.clone();
    leray_project_in_place(&mut out);
    out
}

pub fn leray_project_in_place<T: Real>(field: &mut SpectralField<T>) {
    let d = field.grid().dim();
    assert_eq!(field.ncomp(), d, "projection acts on vector fields");
    field.for_each_mode_mut(|m, v| {
        let k2 = m.k_squared();
        if k2 == 0 {
            v.iter_mut().for_each(|z| *z = Complex::new(T::zero(), T::zero()));
            return;
        }
        let mut dot = Complex::new(T::zero(), T::zero());
        for c in 0..d {
            dot = dot + v[c] * T::of(m.k[c] as f64);
        }
        let dot = dot / T::of(k2 as f64);
        for c in 0..d {
            v[c] = v[c] - dot * T::of(m.k[c] as f64);
        }
    });
}

fn check_alpha<T: Real>(alpha: T) -> Result<()> {
    if !(alpha.is_finite() && alpha >= T::zero()) {
        return Err(Error::Config(format!("regularization length must be finite and non-negative, got {alpha}")));
    }
    Ok(())
}

/// `(I + α²A)⁻¹`: divides mode `k` by `1 + α²(2π|k|)²`.
pub fn helmholtz_inverse<T: Real>(field: &SpectralField<T>, alpha: T) -> Result<SpectralField<T>> {
    let mut out = field.clone();
    helmholtz_inverse_in_place(&mut out, alpha)?;
    Ok(out)
}

pub fn helmholtz_inverse_in_place<T: Real>(field: &mut SpectralField<T>, alpha: T) -> Result<()> {
    check_alpha(alpha)?;
    if alpha == T::zero() {
        return Ok(());
    }
    let a2 = alpha * alpha;
    field.scale_modes(|m| T::one() / (T::one() + a2 * stokes_eigenvalue::<T>(m)));
    Ok(())
}

/// `(I + α²A)`: multiplies mode `k` by `1 + α²(2π|k|)²`.
pub fn helmholtz_apply<T: Real>(field: &SpectralField<T>, alpha: T) -> Result<SpectralField<T>> {
    check_alpha(alpha)?;
    let a2 = alpha * alpha;
    let mut out = field.clone();
    out.scale_modes(|m| T::one() + a2 * stokes_eigenvalue::<T>(m));
    Ok(out)
}

/// `∂/∂x_axis`, multiplication by `2πi k_axis`.
pub fn partial<T: Real>(field: &SpectralField<T>, axis: usize) -> SpectralField<T> {
    let tp = two_pi::<T>();
    let mut out = field.clone();
    out.for_each_mode_mut(|m, v| {
        let f = tp * T::of(m.k[axis] as f64);
        for z in v.iter_mut() {
            *z = Complex::new(-z.im * f, z.re * f);
        }
    });
    out
}

/// Gradient tensor: entry `c` holds `(∂_1 u_c, .., ∂_d u_c)`.
pub fn gradient<T: Real>(field: &SpectralField<T>) -> Vec<SpectralField<T>> {
    let g = field.grid();
    let d = g.dim();
    let tp = two_pi::<T>();
    (0..field.ncomp())
        .map(|c| {
            let src = field.component(c);
            let comps = (0..d)
                .map(|axis| {
                    g.modes()
                        .map(|m| {
                            let z = src[m.index];
                            let f = tp * T::of(m.k[axis] as f64);
                            Complex::new(-z.im * f, z.re * f)
                        })
                        .collect()
                })
                .collect();
            SpectralField::from_components(g, comps).expect("sizes follow the grid")
        })
        .collect()
}

/// `∇·u` as a one-component field.
pub fn divergence<T: Real>(field: &SpectralField<T>) -> SpectralField<T> {
    let g = field.grid();
    let d = g.dim();
    assert_eq!(field.ncomp(), d, "divergence acts on vector fields");
    let tp = two_pi::<T>();
    let mut out = SpectralField::zeros(g, 1);
    for m in g.modes() {
        let mut acc = Complex::new(T::zero(), T::zero());
        for c in 0..d {
            acc = acc + field.component(c)[m.index] * T::of(m.k[c] as f64);
        }
        out.component_mut(0)[m.index] = Complex::new(-acc.im * tp, acc.re * tp);
    }
    out
}

/// `Δu`, multiplication by `-(2π|k|)²`.
pub fn laplacian<T: Real>(field: &SpectralField<T>) -> SpectralField<T> {
    let mut out = field.clone();
    out.scale_modes(|m| -stokes_eigenvalue::<T>(m));
    out
}

/// Which modes survive a spectral truncation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Truncation {
    /// Keep `|k_i| < n/3` on every axis.
    TwoThirds,
    /// Keep `|k| ≤ radius`.
    SharpRadius(f64),
}

impl Truncation {
    pub fn keeps(&self, grid: GridSpec, m: &Mode) -> bool {
        if m.nyquist {
            return false;
        }
        match *self {
            Truncation::TwoThirds => {
                let n = grid.n() as i64;
                m.k[..grid.dim()].iter().all(|&k| 3 * k.abs() < n)
            }
            Truncation::SharpRadius(r) => m.k_norm() <= r + 1e-9,
        }
    }

    /// Largest `|k_i|` kept on an axis by the two-thirds rule.
    pub fn two_thirds_cutoff(grid: GridSpec) -> i64 {
        (grid.n() as i64 - 1) / 3
    }
}

pub fn dealias_truncate<T: Real>(field: &SpectralField<T>, rule: Truncation) -> SpectralField<T> {
    let mut out = field.clone();
    dealias_in_place(&mut out, rule);
    out
}

pub fn dealias_in_place<T: Real>(field: &mut SpectralField<T>, rule: Truncation) {
    let g = field.grid();
    field.scale_modes(|m| if rule.keeps(g, m) { T::one() } else { T::zero() });
}
