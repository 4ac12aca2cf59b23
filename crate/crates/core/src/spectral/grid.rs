use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform discretization of the unit torus `[0,1]^dim`.
///
/// Physical samples sit at `x = j/n` per axis and are stored row-major with the
/// last axis contiguous. Spectral coefficients use the real-to-complex layout:
/// every axis but the last runs over the FFT index order `0, 1, .., n/2-1, -n/2, .., -1`,
/// the last axis stores only `0..=n/2`. Coefficients with negative last
/// wavenumber are implied by Hermitian symmetry `û(-k) = conj(û(k))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    n: usize,
}

/// One stored spectral coefficient position.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mode {
    /// Flat offset into a component buffer.
    pub index: usize,
    /// Integer wavevector; unused trailing entries are zero in 2D.
    pub k: [i64; 3],
    /// Number of full-spectrum coefficients the stored one represents (1 or 2).
    pub weight: f64,
    /// True when some axis sits at the Nyquist index `-n/2`.
    pub nyquist: bool,
}

impl Mode {
    #[inline]
    pub fn k_squared(&self) -> i64 {
        self.k.iter().map(|k| k * k).sum()
    }

    #[inline]
    pub fn k_norm(&self) -> f64 {
        (self.k_squared() as f64).sqrt()
    }
}

impl GridSpec {
    pub const MIN_MODES: usize = 4;

    /// Validates `dim ∈ {2,3}` and an even `n ≥ 8`.
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        Self::with_min(dim, n, 8)
    }

    /// Grid constructor used by the brute-force oracles, which also run at `n ∈ {4, 6}`.
    pub fn tiny(dim: usize, n: usize) -> Result<Self> {
        Self::with_min(dim, n, Self::MIN_MODES)
    }

    fn with_min(dim: usize, n: usize, min: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Config(format!("dim must be 2 or 3, got {dim}")));
        }
        if !n.is_multiple_of(2) {
            return Err(Error::Config(format!("n must be even, got {n}")));
        }
        if n < min {
            return Err(Error::Config(format!("n must be at least {min}, got {n}")));
        }
        Ok(Self { dim, n })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored entries along the last spectral axis.
    #[inline]
    pub fn half(&self) -> usize {
        self.n / 2 + 1
    }

    /// Number of physical samples, `n^dim`.
    pub fn physical_len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Number of stored complex coefficients per component.
    pub fn spectral_len(&self) -> usize {
        self.n.pow(self.dim as u32 - 1) * self.half()
    }

    /// Number of full-spectrum modes, `n^dim`.
    pub fn total_modes(&self) -> usize {
        self.physical_len()
    }

    /// Shape of the stored spectral array, outermost axis first.
    pub fn spectral_shape(&self) -> Vec<usize> {
        let mut shape = vec![self.n; self.dim - 1];
        shape.push(self.half());
        shape
    }

    /// Physical grid spacing.
    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Signed wavenumber of an FFT-ordered index along a full axis.
    #[inline]
    pub fn wavenumber(&self, index: usize) -> i64 {
        let n = self.n as i64;
        let i = index as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// FFT-ordered index of a signed wavenumber along a full axis.
    #[inline]
    pub fn index_of(&self, k: i64) -> Option<usize> {
        let n = self.n as i64;
        if k < -n / 2 || k >= n / 2 {
            return None;
        }
        Some(k.rem_euclid(n) as usize)
    }

    /// Flat storage offset of the wavevector `k`, if it is stored directly
    /// (last entry in `0..n/2`). Negative last entries are reached through their conjugate.
    pub fn offset_of(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.dim {
            return None;
        }
        let last = k[self.dim - 1];
        if last < 0 || last >= (self.n / 2) as i64 {
            return None;
        }
        let mut offset = 0usize;
        for &kk in &k[..self.dim - 1] {
            offset = offset * self.n + self.index_of(kk)?;
        }
        Some(offset * self.half() + last as usize)
    }

    /// Iterates the stored coefficients in storage order.
    pub fn modes(&self) -> ModeIter {
        ModeIter {
            grid: *self,
            next: 0,
            len: self.spectral_len(),
            pos: [0; 3],
        }
    }

    #[cfg(test)]
    fn mode_at(&self, index: usize) -> Mode {
        let h = self.half();
        let last = index % h;
        let mut rest = index / h;
        let mut k = [0i64; 3];
        let mut nyquist = last == self.n / 2;
        for axis in (0..self.dim - 1).rev() {
            let i = rest % self.n;
            rest /= self.n;
            k[axis] = self.wavenumber(i);
            nyquist |= i == self.n / 2;
        }
        k[self.dim - 1] = last as i64;
        let weight = if last == 0 || last == self.n / 2 { 1.0 } else { 2.0 };
        Mode {
            index,
            k,
            weight,
            nyquist,
        }
    }
}

pub struct ModeIter {
    grid: GridSpec,
    next: usize,
    len: usize,
    /// storage index along each axis of the mode at `next`
    pos: [usize; 3],
}

impl Iterator for ModeIter {
    type Item = Mode;

    #[inline]
    fn next(&mut self) -> Option<Mode> {
        if self.next >= self.len {
            return None;
        }
        let g = &self.grid;
        let (n, d) = (g.n, g.dim);
        let last = self.pos[d - 1];
        let mut k = [0i64; 3];
        let mut nyquist = last == n / 2;
        for axis in 0..d - 1 {
            let i = self.pos[axis];
            k[axis] = g.wavenumber(i);
            nyquist |= i == n / 2;
        }
        k[d - 1] = last as i64;
        let m = Mode {
            index: self.next,
            k,
            weight: if last == 0 || last == n / 2 { 1.0 } else { 2.0 },
            nyquist,
        };
        self.next += 1;
        let h = g.half();
        for axis in (0..d).rev() {
            self.pos[axis] += 1;
            let extent = if axis == d - 1 { h } else { n };
            if self.pos[axis] < extent {
                break;
            }
            self.pos[axis] = 0;
        }
        Some(m)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let r = self.len - self.next;
        (r, Some(r))
    }
}

impl ExactSizeIterator for ModeIter {}
