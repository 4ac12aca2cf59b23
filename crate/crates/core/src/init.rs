//! Initial-condition presets.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{
    dealias_in_place, leray_project_in_place, sobolev_norm, GridSpec, PhysicalField, SpectralField, Transform,
    Truncation,
};

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Per-mode generator: a given `(seed, k)` yields the same draw on every grid
/// that contains `k`, so fields at different resolutions share their common modes.
fn mode_rng(seed: u64, k: &[i64; 3]) -> ChaCha8Rng {
    let mut h = splitmix(seed);
    for &kk in k {
        h = splitmix(h ^ (kk as u64));
    }
    ChaCha8Rng::seed_from_u64(h)
}

/// Real field with independent standard Gaussian coefficients on every mode,
/// made Hermitian, mean-zero and Nyquist-free. Not dealiased, not solenoidal.
pub fn random_field<T: Real>(grid: GridSpec, ncomp: usize, seed: u64) -> SpectralField<T> {
    let mut f = SpectralField::zeros(grid, ncomp);
    f.for_each_mode_mut(|m, v| {
        let mut rng = mode_rng(seed, &m.k);
        for z in v.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *z = Complex::new(T::of(re), T::of(im));
        }
    });
    f.symmetrize();
    f
}

/// Random divergence-free vector field supported on the two-thirds dealiased modes.
pub fn random_solenoidal<T: Real>(grid: GridSpec, seed: u64) -> SpectralField<T> {
    let mut f = random_field(grid, grid.dim(), seed);
    dealias_in_place(&mut f, Truncation::TwoThirds);
    leray_project_in_place(&mut f);
    f
}

/// Random analytic datum: Gaussian coefficients, Hermitian, Leray-projected,
/// damped by `e^{-τ₀ 2π|k|}`, dealiased, and scaled so that `|u|²_{L²} = energy`.
pub fn random_analytic<T: Real>(grid: GridSpec, seed: u64, tau0: f64, energy: f64) -> Result<SpectralField<T>> {
    if !(tau0.is_finite() && tau0 >= 0.0 && energy.is_finite() && energy >= 0.0) {
        return Err(Error::Config(format!(
            "random_analytic needs finite tau0 >= 0 and energy >= 0 (got tau0={tau0}, energy={energy})"
        )));
    }
    let mut f = random_solenoidal::<T>(grid, seed);
    let tp = std::f64::consts::TAU;
    f.scale_modes(|m| T::of((-tau0 * tp * m.k_norm()).exp()));
    let e = sobolev_norm(&f, T::zero()).powi(2);
    if e > T::zero() {
        f.scale((T::of(energy) / e).sqrt());
    }
    Ok(f)
}

/// Taylor-Green vortex.
///
/// 2D: `(sin 2πx cos 2πy, -cos 2πx sin 2πy)`, a steady Euler solution with `|u|² = 1/2`.
/// 3D: `(sin 2πx cos 2πy cos 2πz, -cos 2πx sin 2πy cos 2πz, 0)`.
pub fn taylor_green<T: Real>(grid: GridSpec) -> SpectralField<T> {
    let tp = std::f64::consts::TAU;
    let samples = PhysicalField::<T>::from_fn(grid, grid.dim(), |x| {
        let (sx, cx) = (tp * x[0]).sin_cos();
        let (sy, cy) = (tp * x[1]).sin_cos();
        if grid.dim() == 2 {
            vec![sx * cy, -cx * sy]
        } else {
            let cz = (tp * x[2]).cos();
            vec![sx * cy * cz, -cx * sy * cz, 0.0]
        }
    });
    let mut f = Transform::new(grid).to_spectral(&samples).expect("grid matches");
    // remove rounding residue outside the support
    let scale = f.max_abs();
    f.for_each_mode_mut(|_, v| {
        for z in v.iter_mut() {
            if z.norm() < T::of(1e3) * T::epsilon() * scale {
                *z = Complex::new(T::zero(), T::zero());
            }
        }
    });
    f.symmetrize();
    f
}
