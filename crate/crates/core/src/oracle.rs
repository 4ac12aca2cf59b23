//! Brute-force references for the fast spectral paths.
//!
//! Everything here works on an explicit list of full-spectrum modes and costs
//! `O(M²)`; inputs are guarded by [`ORACLE_MODE_LIMIT`]. Nothing in this module
//! calls into the FFT or the pseudo-spectral nonlinear term.

use std::collections::HashMap;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{GridSpec, NormSpec, SpectralField, Truncation};

/// Largest grid (in full-spectrum modes) the oracles accept.
pub const ORACLE_MODE_LIMIT: usize = 10_000;

/// Explicit `(k, û_k)` list covering both halves of the spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseModeSet {
    pub dim: usize,
    pub modes: Vec<([i64; 3], Vec<Complex<f64>>)>,
}

impl DenseModeSet {
    /// Expands every non-Nyquist mode of `field` that `keep` accepts.
    pub fn from_field<T: Real>(field: &SpectralField<T>, keep: Option<Truncation>) -> Result<Self> {
        let g = field.grid();
        guard(g)?;
        let d = g.dim();
        let half = (g.n() / 2) as i64;
        let mut modes = Vec::new();
        for k in wavevectors(d, half) {
            if let Some(rule) = keep {
                if !keeps(rule, g, &k) {
                    continue;
                }
            }
            let v: Vec<Complex<f64>> = field
                .mode(&k[..d])
                .into_iter()
                .map(|z| Complex::new(z.re.to_f64(), z.im.to_f64()))
                .collect();
            if v.iter().any(|z| z.norm_sqr() > 0.0) {
                modes.push((k, v));
            }
        }
        Ok(Self { dim: d, modes })
    }

    /// Largest violation of `û(-k) = conj(û(k))`.
    pub fn hermitian_defect(&self) -> f64 {
        let lookup: HashMap<[i64; 3], &Vec<Complex<f64>>> = self.modes.iter().map(|(k, v)| (*k, v)).collect();
        let mut worst: f64 = 0.0;
        for (k, v) in &self.modes {
            let neg = [-k[0], -k[1], -k[2]];
            match lookup.get(&neg) {
                Some(w) => {
                    for (a, b) in v.iter().zip(w.iter()) {
                        worst = worst.max((a - b.conj()).norm());
                    }
                }
                None => worst = worst.max(v.iter().map(|z| z.norm()).fold(0.0, f64::max)),
            }
        }
        worst
    }
}

fn guard(g: GridSpec) -> Result<()> {
    if g.total_modes() > ORACLE_MODE_LIMIT {
        return Err(Error::OracleSize {
            modes: g.total_modes(),
            limit: ORACLE_MODE_LIMIT,
        });
    }
    Ok(())
}

/// Every wavevector with entries in `-half+1 ..= half-1` (Nyquist excluded).
fn wavevectors(dim: usize, half: i64) -> Vec<[i64; 3]> {
    let r = -half + 1..half;
    let mut out = Vec::new();
    if dim == 2 {
        for a in r.clone() {
            for b in r.clone() {
                out.push([a, b, 0]);
            }
        }
    } else {
        for a in r.clone() {
            for b in r.clone() {
                for c in r.clone() {
                    out.push([a, b, c]);
                }
            }
        }
    }
    out
}

fn keeps(rule: Truncation, g: GridSpec, k: &[i64; 3]) -> bool {
    let d = g.dim();
    let n = g.n() as i64;
    if k[..d].iter().any(|&x| x == -n / 2 || x >= n / 2) {
        return false;
    }
    match rule {
        Truncation::TwoThirds => k[..d].iter().all(|&x| 3 * x.abs() < n),
        Truncation::SharpRadius(r) => ((k[..d].iter().map(|x| x * x).sum::<i64>()) as f64).sqrt() <= r + 1e-9,
    }
}

fn project(k: &[i64; 3], v: &mut [Complex<f64>]) {
    let k2: i64 = k.iter().map(|x| x * x).sum();
    if k2 == 0 {
        v.iter_mut().for_each(|z| *z = Complex::new(0.0, 0.0));
        return;
    }
    let mut dot = Complex::new(0.0, 0.0);
    for (c, z) in v.iter().enumerate() {
        dot += z * k[c] as f64;
    }
    dot /= k2 as f64;
    for (c, z) in v.iter_mut().enumerate() {
        *z -= dot * k[c] as f64;
    }
}

/// Galerkin value of `B(w₁, w₂) = P_σ((w₁·∇)w₂)` by direct double sum:
/// `B̂_k = P(k) Σ_{p+q=k} (2πi q·ŵ₁_p) ŵ₂_q`, with inputs and output restricted by `cutoff`.
pub fn convolution_bilinear<T: Real>(
    w1: &SpectralField<T>,
    w2: &SpectralField<T>,
    cutoff: Truncation,
) -> Result<SpectralField<T>> {
    let g = w1.grid();
    let d = g.dim();
    let a = DenseModeSet::from_field(w1, Some(cutoff))?;
    let b = DenseModeSet::from_field(w2, Some(cutoff))?;
    let tp = std::f64::consts::TAU;
    let mut acc: HashMap<[i64; 3], Vec<Complex<f64>>> = HashMap::new();
    for (p, up) in &a.modes {
        for (q, vq) in &b.modes {
            let k = [p[0] + q[0], p[1] + q[1], p[2] + q[2]];
            if !keeps(cutoff, g, &k) {
                continue;
            }
            let mut qu = Complex::new(0.0, 0.0);
            for c in 0..d {
                qu += up[c] * q[c] as f64;
            }
            let factor = Complex::new(0.0, tp) * qu;
            let slot = acc.entry(k).or_insert_with(|| vec![Complex::new(0.0, 0.0); d]);
            for c in 0..d {
                slot[c] += factor * vq[c];
            }
        }
    }
    let mut out = SpectralField::zeros_vector(g);
    for (k, mut v) in acc {
        project(&k, &mut v);
        if let Some(i) = g.offset_of(&k[..d]) {
            for c in 0..d {
                out.component_mut(c)[i] = Complex::new(T::of(v[c].re), T::of(v[c].im));
            }
        }
    }
    Ok(out)
}

/// `B(u, u)` by direct convolution.
pub fn convolution_nonlinear_term<T: Real>(u: &SpectralField<T>, cutoff: Truncation) -> Result<SpectralField<T>> {
    convolution_bilinear(u, u, cutoff)
}

/// Euler-Voigt right-hand side `-(I+α²A)⁻¹ B(u,u)` built from the convolution oracle.
pub fn convolution_rhs_voigt<T: Real>(u: &SpectralField<T>, alpha: f64) -> Result<SpectralField<T>> {
    let mut b = convolution_nonlinear_term(u, Truncation::TwoThirds)?;
    let tp2 = std::f64::consts::TAU.powi(2);
    b.scale_modes(|m| T::of(-1.0 / (1.0 + alpha * alpha * tp2 * m.k_squared() as f64)));
    Ok(b)
}

/// Residual `|(u(t+h) - u(t-h))/2h - F(u(t))|_{L²}` of the centred difference
/// against the Euler-Voigt vector field `F`; `O(h²)` along a true trajectory.
pub fn fd_time_derivative<T: Real>(snapshots: [&SpectralField<T>; 3], h: f64, alpha: f64) -> Result<f64> {
    let [before, mid, after] = snapshots;
    let rhs = convolution_rhs_voigt(mid, alpha)?;
    let mut diff = after.sub(before);
    diff.scale(T::of(1.0 / (2.0 * h)));
    let res = DenseModeSet::from_field(&diff.sub(&rhs), None)?;
    Ok(res
        .modes
        .iter()
        .flat_map(|(_, v)| v.iter())
        .map(|z| z.norm_sqr())
        .sum::<f64>()
        .sqrt())
}

/// Naive evaluation of a Fourier-weighted norm over the full spectrum.
pub fn direct_norm_sums<T: Real>(field: &SpectralField<T>, spec: NormSpec) -> Result<f64> {
    spec.validate()?;
    let set = DenseModeSet::from_field(field, None)?;
    let tp = std::f64::consts::TAU;
    let mut total = 0.0;
    for (k, v) in &set.modes {
        let kappa = ((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64).sqrt();
        let weight = match spec {
            NormSpec::Sobolev { m } => (1.0 + (tp * kappa).powi(2)).powf(m),
            NormSpec::Seminorm { m } => {
                if kappa == 0.0 {
                    0.0
                } else {
                    (tp * kappa).powf(2.0 * m)
                }
            }
            NormSpec::Gevrey { r, tau } => {
                if kappa == 0.0 {
                    0.0
                } else {
                    (tp * kappa).powf(2.0 * r) * (2.0 * tau * tp * kappa).exp()
                }
            }
        };
        for z in v {
            total += weight * z.norm_sqr();
        }
    }
    Ok(total.sqrt())
}

/// `⟨a, b⟩` over the full spectrum, independent of the half-spectrum weights.
pub fn direct_inner<T: Real>(a: &SpectralField<T>, b: &SpectralField<T>) -> Result<f64> {
    let sa = DenseModeSet::from_field(a, None)?;
    let sb = DenseModeSet::from_field(b, None)?;
    let lookup: HashMap<[i64; 3], &Vec<Complex<f64>>> = sb.modes.iter().map(|(k, v)| (*k, v)).collect();
    let mut s = 0.0;
    for (k, v) in &sa.modes {
        if let Some(w) = lookup.get(k) {
            for (x, y) in v.iter().zip(w.iter()) {
                s += (x * y.conj()).re;
            }
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::{random_solenoidal, taylor_green};

    #[test]
    fn zero_and_taylor_green() {
        let g = GridSpec::new(2, 8).unwrap();
        let z = SpectralField::<f64>::zeros_vector(g);
        assert_eq!(convolution_nonlinear_term(&z, Truncation::TwoThirds).unwrap().max_abs(), 0.0);
        let tg = taylor_green::<f64>(g);
        assert!(convolution_nonlinear_term(&tg, Truncation::TwoThirds).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn energy_orthogonality_holds_in_the_oracle() {
        for (dim, n) in [(2, 8), (3, 6), (3, 8)] {
            let g = GridSpec::tiny(dim, n).unwrap();
            let u = random_solenoidal::<f64>(g, 17);
            let b = convolution_nonlinear_term(&u, Truncation::TwoThirds).unwrap();
            let ip = direct_inner(&b, &u).unwrap();
            let scale = direct_norm_sums(&b, NormSpec::Sobolev { m: 0.0 }).unwrap()
                * direct_norm_sums(&u, NormSpec::Sobolev { m: 0.0 }).unwrap();
            assert!(ip.abs() <= 1e-13 * scale, "{ip} vs {scale}");
            assert!(DenseModeSet::from_field(&b, None).unwrap().hermitian_defect() < 1e-13 * b.max_abs());
        }
    }

    #[test]
    fn size_guard() {
        let g = GridSpec::new(3, 32).unwrap();
        let z = SpectralField::<f64>::zeros_vector(g);
        assert!(matches!(
            convolution_nonlinear_term(&z, Truncation::TwoThirds),
            Err(Error::OracleSize { .. })
        ));
    }

    #[test]
    fn direct_norms_single_mode() {
        let g = GridSpec::new(2, 8).unwrap();
        let mut u = SpectralField::<f64>::zeros_vector(g);
        u.set_mode(&[1, 0], &[Complex::new(0.0, 0.0), Complex::new(0.5, 0.0)]).unwrap();
        let l2 = direct_norm_sums(&u, NormSpec::Sobolev { m: 0.0 }).unwrap();
        assert!((l2 - 0.5f64.sqrt()).abs() < 1e-15);
        let semi = direct_norm_sums(&u, NormSpec::Seminorm { m: 1.0 }).unwrap();
        assert!((semi - std::f64::consts::TAU * 0.5f64.sqrt()).abs() < 1e-14);
        assert_eq!(direct_norm_sums(&SpectralField::<f64>::zeros_vector(g), NormSpec::Gevrey { r: 1.0, tau: 1.0 }).unwrap(), 0.0);
    }

    #[test]
    fn fd_residual_vanishes_for_steady_flow() {
        let g = GridSpec::new(2, 8).unwrap();
        let tg = taylor_green::<f64>(g);
        assert!(fd_time_derivative([&tg, &tg, &tg], 1e-2, 0.1).unwrap() < 1e-12);
        let z = SpectralField::<f64>::zeros_vector(g);
        assert_eq!(fd_time_derivative([&z, &z, &z], 1e-2, 0.1).unwrap(), 0.0);
    }
}
