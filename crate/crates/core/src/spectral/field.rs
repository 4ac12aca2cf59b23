use num_complex::Complex;

use super::grid::{GridSpec, Mode};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Fourier coefficients of a real, mean-zero periodic field with `ncomp` components.
///
/// `û_k` is the coefficient of `e^{2πi k·x}`. Storage follows the half-spectrum
/// layout of [`GridSpec`], so Hermitian symmetry holds by construction except
/// inside the `k_last = 0` plane, where [`SpectralField::symmetrize`] restores it.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField<T> {
    grid: GridSpec,
    comps: Vec<Vec<Complex<T>>>,
}

/// Real samples of a field on the physical grid, one buffer per component.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalField<T> {
    grid: GridSpec,
    comps: Vec<Vec<T>>,
}

impl<T: Real> SpectralField<T> {
    pub fn zeros(grid: GridSpec, ncomp: usize) -> Self {
        Self {
            grid,
            comps: vec![vec![Complex::new(T::zero(), T::zero()); grid.spectral_len()]; ncomp],
        }
    }

    /// Vector field with one component per spatial dimension.
    pub fn zeros_vector(grid: GridSpec) -> Self {
        Self::zeros(grid, grid.dim())
    }

    pub fn from_components(grid: GridSpec, comps: Vec<Vec<Complex<T>>>) -> Result<Self> {
        for c in &comps {
            if c.len() != grid.spectral_len() {
                return Err(Error::ShapeMismatch {
                    expected: format!("{} coefficients", grid.spectral_len()),
                    found: format!("{} coefficients", c.len()),
                });
            }
        }
        Ok(Self { grid, comps })
    }

    #[inline]
    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    #[inline]
    pub fn ncomp(&self) -> usize {
        self.comps.len()
    }

    #[inline]
    pub fn component(&self, c: usize) -> &[Complex<T>] {
        &self.comps[c]
    }

    #[inline]
    pub fn component_mut(&mut self, c: usize) -> &mut [Complex<T>] {
        &mut self.comps[c]
    }

    pub fn components(&self) -> &[Vec<Complex<T>>] {
        &self.comps
    }

    pub fn into_components(self) -> Vec<Vec<Complex<T>>> {
        self.comps
    }

    /// Applies `f` to the coefficient vector of every stored mode.
    pub fn for_each_mode_mut(&mut self, mut f: impl FnMut(&Mode, &mut [Complex<T>])) {
        let nc = self.ncomp();
        let mut buf = vec![Complex::new(T::zero(), T::zero()); nc];
        for m in self.grid.modes() {
            for c in 0..nc {
                buf[c] = self.comps[c][m.index];
            }
            f(&m, &mut buf);
            for c in 0..nc {
                self.comps[c][m.index] = buf[c];
            }
        }
    }

    /// Multiplies every coefficient by a real per-mode factor.
    pub fn scale_modes(&mut self, mut factor: impl FnMut(&Mode) -> T) {
        for m in self.grid.modes() {
            let s = factor(&m);
            for comp in &mut self.comps {
                comp[m.index] = comp[m.index] * s;
            }
        }
    }

    /// Sets the coefficient of wavevector `k`, writing the conjugate where `-k` is the stored partner.
    pub fn set_mode(&mut self, k: &[i64], value: &[Complex<T>]) -> Result<()> {
        self.check_k(k, value.len())?;
        let neg: Vec<i64> = k.iter().map(|x| -x).collect();
        let last = k[self.grid.dim() - 1];
        if last >= 0 {
            if let Some(i) = self.grid.offset_of(k) {
                for (c, v) in value.iter().enumerate() {
                    self.comps[c][i] = *v;
                }
            }
        }
        if last <= 0 {
            if let Some(i) = self.grid.offset_of(&neg) {
                for (c, v) in value.iter().enumerate() {
                    self.comps[c][i] = v.conj();
                }
            }
        }
        Ok(())
    }

    /// Coefficient vector of wavevector `k` (any sign), zero for unrepresentable modes.
    pub fn mode(&self, k: &[i64]) -> Vec<Complex<T>> {
        let zero = Complex::new(T::zero(), T::zero());
        if k.len() != self.grid.dim() {
            return vec![zero; self.ncomp()];
        }
        if let Some(i) = self.grid.offset_of(k) {
            return self.comps.iter().map(|c| c[i]).collect();
        }
        let neg: Vec<i64> = k.iter().map(|x| -x).collect();
        if let Some(i) = self.grid.offset_of(&neg) {
            return self.comps.iter().map(|c| c[i].conj()).collect();
        }
        vec![zero; self.ncomp()]
    }

    fn check_k(&self, k: &[i64], nvals: usize) -> Result<()> {
        if k.len() != self.grid.dim() || nvals != self.ncomp() {
            return Err(Error::ShapeMismatch {
                expected: format!("wavevector of length {}, {} values", self.grid.dim(), self.ncomp()),
                found: format!("wavevector of length {}, {} values", k.len(), nvals),
            });
        }
        Ok(())
    }

    /// Zeroes the mean (`k = 0`) coefficient.
    pub fn zero_mean(&mut self) {
        for comp in &mut self.comps {
            comp[0] = Complex::new(T::zero(), T::zero());
        }
    }

    /// Zeroes every coefficient with a wavenumber at the Nyquist index `-n/2`.
    pub fn zero_nyquist(&mut self) {
        let zero = Complex::new(T::zero(), T::zero());
        for m in self.grid.modes() {
            if m.nyquist {
                for comp in &mut self.comps {
                    comp[m.index] = zero;
                }
            }
        }
    }

    /// Index of `-k` inside the `k_last = 0` plane for a stored index of that plane.
    fn plane_partner(&self, m: &Mode) -> Option<usize> {
        let d = self.grid.dim();
        let neg: Vec<i64> = m.k[..d].iter().map(|x| -x).collect();
        self.grid.offset_of(&neg)
    }

    /// Restores `û(-k) = conj(û(k))` inside the `k_last = 0` plane by averaging partners,
    /// then enforces the mean-zero and Nyquist-free conditions.
    pub fn symmetrize(&mut self) {
        let two = T::of(2.0);
        let modes: Vec<Mode> = self.grid.modes().filter(|m| m.k[self.grid.dim() - 1] == 0).collect();
        for m in &modes {
            if m.nyquist {
                continue;
            }
            let Some(p) = self.plane_partner(m) else { continue };
            if p < m.index {
                continue;
            }
            for comp in &mut self.comps {
                let avg = (comp[m.index] + comp[p].conj()) / two;
                comp[m.index] = avg;
                comp[p] = avg.conj();
            }
        }
        self.zero_mean();
        self.zero_nyquist();
    }

    /// Largest violation of Hermitian symmetry, relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> T {
        let scale = self.max_abs();
        if scale == T::zero() {
            return T::zero();
        }
        let mut worst = T::zero();
        for m in self.grid.modes().filter(|m| m.k[self.grid.dim() - 1] == 0 && !m.nyquist) {
            if let Some(p) = self.plane_partner(&m) {
                for comp in &self.comps {
                    worst = worst.max((comp[m.index] - comp[p].conj()).norm());
                }
            }
        }
        worst / scale
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.hermitian_defect() <= tol
    }

    pub fn max_abs(&self) -> T {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(T::zero(), |acc, z| acc.max(z.norm_sqr()))
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Real `L²(T^d)` inner product, `Σ_k û_k · conj(v̂_k)` over the full spectrum.
    pub fn inner(&self, other: &Self) -> T {
        debug_assert_eq!(self.grid, other.grid);
        debug_assert_eq!(self.ncomp(), other.ncomp());
        let mut acc = T::zero();
        for m in self.grid.modes() {
            let w = T::of(m.weight);
            let mut s = T::zero();
            for (a, b) in self.comps.iter().zip(&other.comps) {
                let (x, y) = (a[m.index], b[m.index]);
                s = s + x.re * y.re + x.im * y.im;
            }
            acc = acc + w * s;
        }
        acc
    }

    /// `|u|²` in `L²(T^d)`.
    pub fn norm_sq(&self) -> T {
        self.inner(self)
    }

    pub fn scale(&mut self, s: T) {
        for comp in &mut self.comps {
            for z in comp.iter_mut() {
                *z = *z * s;
            }
        }
    }

    /// `self += a * x`.
    pub fn axpy(&mut self, a: T, x: &Self) {
        debug_assert_eq!(self.grid, x.grid);
        for (dst, src) in self.comps.iter_mut().zip(&x.comps) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d = *d + *s * a;
            }
        }
    }

    pub fn scaled(&self, s: T) -> Self {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-T::one(), other);
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(T::one(), other);
        out
    }

    /// Largest relative divergence `|k·û_k| / (|k| |û_k|)` over modes that are not negligible.
    pub fn divergence_defect(&self) -> T {
        let d = self.grid.dim();
        if self.ncomp() != d {
            return T::infinity();
        }
        let floor = self.max_abs() * T::epsilon();
        let floor_sq = floor * floor;
        // compare squared ratios, one square root at the end
        let mut worst = T::zero();
        for m in self.grid.modes() {
            let k2 = m.k_squared();
            if k2 == 0 {
                continue;
            }
            let mut dot = Complex::new(T::zero(), T::zero());
            let mut mag = T::zero();
            for c in 0..d {
                let z = self.comps[c][m.index];
                dot = dot + z * T::of(m.k[c] as f64);
                mag = mag + z.norm_sqr();
            }
            let denom = T::of(k2 as f64) * mag.max(floor_sq);
            if denom > T::zero() {
                worst = worst.max(dot.norm_sqr() / denom);
            }
        }
        worst.sqrt()
    }

    /// Whether `k·û_k ≈ 0` for every mode at tolerance `tol`.
    pub fn is_solenoidal(&self, tol: T) -> bool {
        self.divergence_defect() <= tol
    }

    /// Copies coefficients onto another grid of the same dimension, truncating or zero-padding.
    pub fn resample(&self, target: GridSpec) -> Result<Self> {
        if target.dim() != self.grid.dim() {
            return Err(Error::ShapeMismatch {
                expected: format!("dimension {}", self.grid.dim()),
                found: format!("dimension {}", target.dim()),
            });
        }
        let mut out = Self::zeros(target, self.ncomp());
        let d = target.dim();
        for m in target.modes() {
            if m.nyquist {
                continue;
            }
            if let Some(i) = self.grid.offset_of(&m.k[..d]) {
                for c in 0..self.ncomp() {
                    out.comps[c][m.index] = self.comps[c][i];
                }
            }
        }
        out.zero_nyquist();
        Ok(out)
    }

    /// Converts every coefficient to another scalar type.
    pub fn cast<U: Real>(&self) -> SpectralField<U> {
        SpectralField {
            grid: self.grid,
            comps: self
                .comps
                .iter()
                .map(|c| c.iter().map(|z| Complex::new(U::of(z.re.to_f64()), U::of(z.im.to_f64()))).collect())
                .collect(),
        }
    }
}

impl<T: Real> PhysicalField<T> {
    pub fn zeros(grid: GridSpec, ncomp: usize) -> Self {
        Self {
            grid,
            comps: vec![vec![T::zero(); grid.physical_len()]; ncomp],
        }
    }

    pub fn from_components(grid: GridSpec, comps: Vec<Vec<T>>) -> Result<Self> {
        for c in &comps {
            if c.len() != grid.physical_len() {
                return Err(Error::ShapeMismatch {
                    expected: format!("{} samples", grid.physical_len()),
                    found: format!("{} samples", c.len()),
                });
            }
        }
        Ok(Self { grid, comps })
    }

    /// Samples `f(x)` at every grid point; `x` has trailing zeros in 2D.
    pub fn from_fn(grid: GridSpec, ncomp: usize, f: impl Fn([f64; 3]) -> Vec<f64>) -> Self {
        let mut out = Self::zeros(grid, ncomp);
        for p in 0..grid.physical_len() {
            let x = point(grid, p);
            let v = f(x);
            for c in 0..ncomp {
                out.comps[c][p] = T::of(v[c]);
            }
        }
        out
    }

    #[inline]
    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    #[inline]
    pub fn ncomp(&self) -> usize {
        self.comps.len()
    }

    pub fn component(&self, c: usize) -> &[T] {
        &self.comps[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [T] {
        &mut self.comps[c]
    }

    /// Grid average of `|u(x)|²`.
    pub fn mean_square(&self) -> T {
        let n = T::of(self.grid.physical_len() as f64);
        self.comps.iter().flat_map(|c| c.iter()).map(|&v| v * v).sum::<T>() / n
    }

    pub fn max_abs(&self) -> T {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(T::zero(), |acc, v| acc.max(v.abs()))
    }
}

/// Physical coordinates of the flat sample index `p`.
pub fn point(grid: GridSpec, p: usize) -> [f64; 3] {
    let n = grid.n();
    let mut x = [0.0; 3];
    let mut rest = p;
    for axis in (0..grid.dim()).rev() {
        x[axis] = (rest % n) as f64 / n as f64;
        rest /= n;
    }
    x
}
