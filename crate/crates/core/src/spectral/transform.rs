use std::sync::Arc;

use num_complex::Complex;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

use super::field::{PhysicalField, SpectralField};
use super::grid::GridSpec;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// FFT plans and scratch space for one grid.
///
/// A `Transform` is owned by a single worker; plans are `Arc`s and may be
/// shared by cloning, scratch buffers are per instance.
pub struct Transform<T: Real> {
    grid: GridSpec,
    r2c: Arc<dyn RealToComplex<T>>,
    c2r: Arc<dyn ComplexToReal<T>>,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
    real_line: Vec<T>,
    half_line: Vec<Complex<T>>,
    real_scratch: Vec<Complex<T>>,
    block: Vec<Complex<T>>,
    fft_scratch: Vec<Complex<T>>,
    work: Vec<Complex<T>>,
}

impl<T: Real> Clone for Transform<T> {
    fn clone(&self) -> Self {
        Self {
            grid: self.grid,
            r2c: Arc::clone(&self.r2c),
            c2r: Arc::clone(&self.c2r),
            fwd: Arc::clone(&self.fwd),
            inv: Arc::clone(&self.inv),
            real_line: self.real_line.clone(),
            half_line: self.half_line.clone(),
            real_scratch: self.real_scratch.clone(),
            block: self.block.clone(),
            fft_scratch: self.fft_scratch.clone(),
            work: self.work.clone(),
        }
    }
}

impl<T: Real> Transform<T> {
    pub fn new(grid: GridSpec) -> Self {
        let n = grid.n();
        let mut real_planner = RealFftPlanner::<T>::new();
        let r2c = real_planner.plan_fft_forward(n);
        let c2r = real_planner.plan_fft_inverse(n);
        let mut planner = FftPlanner::<T>::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let zero = Complex::new(T::zero(), T::zero());
        let real_scratch_len = r2c.get_scratch_len().max(c2r.get_scratch_len());
        let fft_scratch_len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        let block_len = TILE * n;
        Self {
            grid,
            r2c,
            c2r,
            fwd,
            inv,
            real_line: vec![T::zero(); n],
            half_line: vec![zero; grid.half()],
            real_scratch: vec![zero; real_scratch_len],
            block: vec![zero; block_len],
            fft_scratch: vec![zero; fft_scratch_len],
            work: vec![zero; grid.spectral_len()],
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    /// Forward transform of one real component: `û_k = n^{-d} Σ_x u(x) e^{-2πi k·x}`.
    ///
    /// The mean and Nyquist coefficients are returned as computed; callers that
    /// need a mean-zero field enforce it themselves.
    pub fn component_to_spectral(&mut self, samples: &[T], out: &mut [Complex<T>]) {
        let g = self.grid;
        let (n, h) = (g.n(), g.half());
        debug_assert_eq!(samples.len(), g.physical_len());
        debug_assert_eq!(out.len(), g.spectral_len());
        let lines = g.physical_len() / n;
        for l in 0..lines {
            self.real_line.copy_from_slice(&samples[l * n..(l + 1) * n]);
            self.r2c
                .process_with_scratch(&mut self.real_line, &mut out[l * h..(l + 1) * h], &mut self.real_scratch)
                .expect("real-to-complex buffer sizes are fixed by the plan");
        }
        for axis in 0..g.dim() - 1 {
            strided_fft(g, axis, out, &mut self.block, &*self.fwd, &mut self.fft_scratch);
        }
        let norm = T::one() / T::of(g.physical_len() as f64);
        for z in out.iter_mut() {
            *z = *z * norm;
        }
    }

    /// Inverse transform of one component: `u(x) = Σ_k û_k e^{2πi k·x}`.
    pub fn component_to_physical(&mut self, coeffs: &[Complex<T>], out: &mut [T]) {
        let g = self.grid;
        let (n, h) = (g.n(), g.half());
        debug_assert_eq!(coeffs.len(), g.spectral_len());
        debug_assert_eq!(out.len(), g.physical_len());
        self.work.copy_from_slice(coeffs);
        for axis in 0..g.dim() - 1 {
            strided_fft(g, axis, &mut self.work, &mut self.block, &*self.inv, &mut self.fft_scratch);
        }
        let lines = g.physical_len() / n;
        for l in 0..lines {
            self.half_line.copy_from_slice(&self.work[l * h..(l + 1) * h]);
            // a Hermitian line has real end points; drop rounding residue
            self.half_line[0].im = T::zero();
            self.half_line[h - 1].im = T::zero();
            self.c2r
                .process_with_scratch(&mut self.half_line, &mut out[l * n..(l + 1) * n], &mut self.real_scratch)
                .expect("complex-to-real buffer sizes are fixed by the plan");
        }
    }

    pub fn to_physical(&mut self, field: &SpectralField<T>) -> Result<PhysicalField<T>> {
        self.check(field.grid())?;
        let mut out = PhysicalField::zeros(self.grid, field.ncomp());
        for c in 0..field.ncomp() {
            self.component_to_physical(field.component(c), out.component_mut(c));
        }
        Ok(out)
    }

    pub fn to_spectral(&mut self, samples: &PhysicalField<T>) -> Result<SpectralField<T>> {
        self.check(samples.grid())?;
        let mut out = SpectralField::zeros(self.grid, samples.ncomp());
        for c in 0..samples.ncomp() {
            self.component_to_spectral(samples.component(c), out.component_mut(c));
        }
        Ok(out)
    }

    fn check(&self, grid: GridSpec) -> Result<()> {
        if grid != self.grid {
            return Err(Error::ShapeMismatch {
                expected: format!("{:?}", self.grid),
                found: format!("{grid:?}"),
            });
        }
        Ok(())
    }
}

/// Lines gathered per batch in [`strided_fft`].
const TILE: usize = 16;

/// In-place complex FFT along a non-last axis of the stored spectral array.
///
/// Within each contiguous block `[n][stride]`, up to [`TILE`] neighbouring
/// lines are gathered into `[TILE][n]`, transformed as a batch and scattered back.
fn strided_fft<T: Real>(
    g: GridSpec,
    axis: usize,
    data: &mut [Complex<T>],
    block: &mut [Complex<T>],
    plan: &dyn Fft<T>,
    scratch: &mut [Complex<T>],
) {
    let n = g.n();
    let stride = g.half() * n.pow((g.dim() - 2 - axis) as u32);
    let block_len = n * stride;
    for chunk in data.chunks_exact_mut(block_len) {
        let mut s0 = 0;
        while s0 < stride {
            let w = TILE.min(stride - s0);
            let tile = &mut block[..w * n];
            for i in 0..n {
                let row = &chunk[i * stride + s0..i * stride + s0 + w];
                for (s, z) in row.iter().enumerate() {
                    tile[s * n + i] = *z;
                }
            }
            plan.process_with_scratch(tile, scratch);
            for i in 0..n {
                let row = &mut chunk[i * stride + s0..i * stride + s0 + w];
                for (s, z) in row.iter_mut().enumerate() {
                    *z = tile[s * n + i];
                }
            }
            s0 += w;
        }
    }
}
