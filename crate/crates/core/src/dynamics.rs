//! Right-hand sides of the Euler, Euler-Voigt and MHD-Voigt systems as ODEs on
//! Fourier coefficients.
//!
//! All nonlinear terms are evaluated pseudo-spectrally in convective form and
//! dealiased with the two-thirds rule, so they equal the Galerkin-truncated
//! convolution `P_N B(P_N w₁, P_N w₂)` exactly (up to rounding).

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{two_pi, Real};
use crate::spectral::{
    dealias_in_place, helmholtz_inverse_in_place, leray_project_in_place, GridSpec, SpectralField, Transform,
    Truncation,
};

/// Regularization lengths `α` (velocity) and `α_M` (magnetic field).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoigtParams<T> {
    pub alpha: T,
    pub alpha_m: T,
}

impl<T: Real> VoigtParams<T> {
    pub fn new(alpha: T, alpha_m: T) -> Result<Self> {
        let p = Self { alpha, alpha_m };
        p.validate()?;
        Ok(p)
    }

    pub fn euler() -> Self {
        Self {
            alpha: T::zero(),
            alpha_m: T::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("alpha_m", self.alpha_m)] {
            if !v.is_finite() || v < T::zero() {
                return Err(Error::Config(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

/// Time, velocity and optional magnetic field.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState<T> {
    pub time: f64,
    pub u: SpectralField<T>,
    pub b: Option<SpectralField<T>>,
}

impl<T: Real> SimState<T> {
    pub fn new(u: SpectralField<T>) -> Self {
        Self { time: 0.0, u, b: None }
    }

    pub fn with_magnetic(u: SpectralField<T>, b: SpectralField<T>) -> Self {
        Self {
            time: 0.0,
            u,
            b: Some(b),
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.u.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.b.as_ref().is_none_or(|b| b.is_finite())
    }
}

/// Which right-hand side drives a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhsKind {
    Euler,
    Voigt,
    MhdVoigt,
}

impl fmt::Display for RhsKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RhsKind::Euler => "euler",
            RhsKind::Voigt => "voigt",
            RhsKind::MhdVoigt => "mhd_voigt",
        })
    }
}

impl FromStr for RhsKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(RhsKind::Euler),
            "voigt" => Ok(RhsKind::Voigt),
            "mhd_voigt" => Ok(RhsKind::MhdVoigt),
            other => Err(Error::Config(format!("unknown rhs kind '{other}' (euler, voigt, mhd_voigt)"))),
        }
    }
}

/// Time derivative of a [`SimState`].
#[derive(Clone, Debug, PartialEq)]
pub struct Derivative<T> {
    pub du: SpectralField<T>,
    pub db: Option<SpectralField<T>>,
}

/// Relative divergence accepted for inputs of the nonlinear term.
pub fn solenoidal_tolerance<T: Real>() -> T {
    T::of(1e4) * T::epsilon()
}

pub(crate) fn require_solenoidal<T: Real>(name: &str, f: &SpectralField<T>) -> Result<()> {
    if f.ncomp() != f.grid().dim() {
        return Err(Error::Contract(format!("{name} must be a vector field")));
    }
    let defect = f.divergence_defect();
    if defect > solenoidal_tolerance::<T>() {
        return Err(Error::Contract(format!("{name} is not divergence-free (relative defect {defect:e})")));
    }
    Ok(())
}

/// Physical values and velocity gradients of one field.
struct Lifted<T> {
    values: Vec<Vec<T>>,
    /// `grads[i*d + j] = ∂_j f_i`
    grads: Vec<Vec<T>>,
}

impl<T: Real> Lifted<T> {
    fn new(grid: GridSpec) -> Self {
        let d = grid.dim();
        let len = grid.physical_len();
        Self {
            values: vec![vec![T::zero(); len]; d],
            grads: vec![vec![T::zero(); len]; d * d],
        }
    }
}

/// Scratch space and FFT plans for nonlinear-term evaluation on one grid.
///
/// Owned by one worker at a time; concurrent trajectories each build their own.
pub struct Workspace<T: Real> {
    grid: GridSpec,
    transform: Transform<T>,
    first: Lifted<T>,
    second: Lifted<T>,
    product: Vec<Vec<T>>,
    coeffs: Vec<Complex<T>>,
    /// `2π k` per stored index, zero on modes removed by the two-thirds rule
    wave: Vec<[T; 3]>,
    /// two-thirds mask per stored index
    keep: Vec<bool>,
}

impl<T: Real> Workspace<T> {
    pub fn new(grid: GridSpec) -> Self {
        let d = grid.dim();
        Self {
            grid,
            transform: Transform::new(grid),
            first: Lifted::new(grid),
            second: Lifted::new(grid),
            product: vec![vec![T::zero(); grid.physical_len()]; d],
            coeffs: vec![Complex::new(T::zero(), T::zero()); grid.spectral_len()],
            wave: grid
                .modes()
                .map(|m| {
                    let keep = Truncation::TwoThirds.keeps(grid, &m);
                    let mut w = [T::zero(); 3];
                    for j in 0..d {
                        if keep {
                            w[j] = two_pi::<T>() * T::of(m.k[j] as f64);
                        }
                    }
                    w
                })
                .collect(),
            keep: grid.modes().map(|m| Truncation::TwoThirds.keeps(grid, &m)).collect(),
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn transform(&mut self) -> &mut Transform<T> {
        &mut self.transform
    }

    fn check_grid(&self, f: &SpectralField<T>) -> Result<()> {
        if f.grid() != self.grid {
            return Err(Error::ShapeMismatch {
                expected: format!("{:?}", self.grid),
                found: format!("{:?}", f.grid()),
            });
        }
        Ok(())
    }

    /// Dealiases `f` and writes its physical values and gradient into `slot`.
    fn lift(&mut self, f: &SpectralField<T>, second: bool) {
        let d = self.grid.dim();
        let zero = Complex::new(T::zero(), T::zero());
        let slot = if second { &mut self.second } else { &mut self.first };
        for i in 0..d {
            let src = f.component(i);
            for (c, (z, &keep)) in self.coeffs.iter_mut().zip(src.iter().zip(&self.keep)) {
                *c = if keep { *z } else { zero };
            }
            self.transform.component_to_physical(&self.coeffs, &mut slot.values[i]);
            for j in 0..d {
                for (c, (z, w)) in self.coeffs.iter_mut().zip(src.iter().zip(&self.wave)) {
                    *c = Complex::new(-z.im * w[j], z.re * w[j]);
                }
                self.transform.component_to_physical(&self.coeffs, &mut slot.grads[i * d + j]);
            }
        }
    }

    /// `product += (a·∇)b - (c·∇)d` term by term, with fields picked from the lifted
    /// slots (`true` = second). Identical pairs cancel exactly.
    fn accumulate(&mut self, plus: (bool, bool), minus: Option<(bool, bool)>) {
        let d = self.grid.dim();
        let pick = |second: bool| if second { &self.second } else { &self.first };
        let (a, b) = (pick(plus.0), pick(plus.1));
        for i in 0..d {
            let out = &mut self.product[i];
            for j in 0..d {
                let aj = &a.values[j];
                let bg = &b.grads[i * d + j];
                match minus {
                    None => {
                        for p in 0..out.len() {
                            out[p] = out[p] + aj[p] * bg[p];
                        }
                    }
                    Some((cs, ds)) => {
                        let cj = &pick(cs).values[j];
                        let dg = &pick(ds).grads[i * d + j];
                        for p in 0..out.len() {
                            out[p] = out[p] + (aj[p] * bg[p] - cj[p] * dg[p]);
                        }
                    }
                }
            }
        }
    }

    fn clear_product(&mut self) {
        for c in &mut self.product {
            c.iter_mut().for_each(|v| *v = T::zero());
        }
    }

    /// Transforms the accumulated product back, dealiases and projects.
    fn finish_projected(&mut self) -> SpectralField<T> {
        let g = self.grid;
        let mut out = SpectralField::zeros_vector(g);
        for i in 0..g.dim() {
            self.transform.component_to_spectral(&self.product[i], out.component_mut(i));
        }
        dealias_in_place(&mut out, Truncation::TwoThirds);
        leray_project_in_place(&mut out);
        out
    }

    fn finish_raw(&mut self) -> SpectralField<T> {
        let g = self.grid;
        let mut out = SpectralField::zeros_vector(g);
        for i in 0..g.dim() {
            self.transform.component_to_spectral(&self.product[i], out.component_mut(i));
        }
        dealias_in_place(&mut out, Truncation::TwoThirds);
        out.zero_mean();
        out
    }

    /// `B(w₁, w₂) = P_σ((w₁·∇)w₂)`, Galerkin-truncated.
    pub fn bilinear(&mut self, w1: &SpectralField<T>, w2: &SpectralField<T>) -> Result<SpectralField<T>> {
        self.check_grid(w1)?;
        self.check_grid(w2)?;
        require_solenoidal("first argument of B", w1)?;
        require_solenoidal("second argument of B", w2)?;
        self.lift(w1, false);
        self.lift(w2, true);
        self.clear_product();
        self.accumulate((false, true), None);
        Ok(self.finish_projected())
    }

    /// `B(u, u)`, Galerkin-truncated.
    pub fn nonlinear_term(&mut self, u: &SpectralField<T>) -> Result<SpectralField<T>> {
        self.check_grid(u)?;
        require_solenoidal("velocity", u)?;
        self.lift(u, false);
        self.clear_product();
        self.accumulate((false, false), None);
        Ok(self.finish_projected())
    }

    /// `(B(𝓑,𝓑) - B(u,u), B(𝓑,u) - B(u,𝓑))`.
    pub fn mhd_terms(
        &mut self,
        u: &SpectralField<T>,
        b: &SpectralField<T>,
    ) -> Result<(SpectralField<T>, SpectralField<T>)> {
        self.check_grid(u)?;
        self.check_grid(b)?;
        require_solenoidal("velocity", u)?;
        require_solenoidal("magnetic field", b)?;
        self.lift(u, false);
        self.lift(b, true);
        self.clear_product();
        self.accumulate((true, true), Some((false, false)));
        let momentum = self.finish_projected();
        self.clear_product();
        self.accumulate((true, false), Some((false, true)));
        let induction = self.finish_projected();
        Ok((momentum, induction))
    }

    /// Dealiased, unprojected `(w₁·∇)w₂`.
    pub fn advection(&mut self, w1: &SpectralField<T>, w2: &SpectralField<T>) -> Result<SpectralField<T>> {
        self.check_grid(w1)?;
        self.check_grid(w2)?;
        self.lift(w1, false);
        self.lift(w2, true);
        self.clear_product();
        self.accumulate((false, true), None);
        Ok(self.finish_raw())
    }

    /// Dealiased spectral coefficients of the pointwise `|f|²`.
    fn square_magnitude(&mut self, f: &SpectralField<T>) -> SpectralField<T> {
        let g = self.grid;
        let mut f = f.clone();
        dealias_in_place(&mut f, Truncation::TwoThirds);
        let mut acc = vec![T::zero(); g.physical_len()];
        let mut buf = vec![T::zero(); g.physical_len()];
        for c in 0..f.ncomp() {
            self.transform.component_to_physical(f.component(c), &mut buf);
            for (a, v) in acc.iter_mut().zip(&buf) {
                *a = *a + *v * *v;
            }
        }
        let mut out = SpectralField::zeros(g, 1);
        self.transform.component_to_spectral(&acc, out.component_mut(0));
        dealias_in_place(&mut out, Truncation::TwoThirds);
        out.zero_mean();
        out
    }
}

fn contract_no_magnetic<T>(state: &SimState<T>) -> Result<()> {
    if state.b.is_some() {
        return Err(Error::Contract("hydrodynamic right-hand side given a magnetic field".into()));
    }
    Ok(())
}

/// Euler: `du/dt = -B(u,u)`.
pub fn rhs_euler<T: Real>(ws: &mut Workspace<T>, state: &SimState<T>) -> Result<SpectralField<T>> {
    contract_no_magnetic(state)?;
    let mut du = ws.nonlinear_term(&state.u)?;
    du.scale(-T::one());
    leray_project_in_place(&mut du);
    Ok(du)
}

/// Euler-Voigt: `du/dt = -(I+α²A)⁻¹ B(u,u)`; `α = 0` is exactly [`rhs_euler`].
pub fn rhs_voigt<T: Real>(
    ws: &mut Workspace<T>,
    state: &SimState<T>,
    params: &VoigtParams<T>,
) -> Result<SpectralField<T>> {
    contract_no_magnetic(state)?;
    params.validate()?;
    let mut du = ws.nonlinear_term(&state.u)?;
    du.scale(-T::one());
    helmholtz_inverse_in_place(&mut du, params.alpha)?;
    leray_project_in_place(&mut du);
    Ok(du)
}

/// MHD-Voigt:
/// `du/dt = (I+α²A)⁻¹[B(𝓑,𝓑) - B(u,u)]`, `d𝓑/dt = (I+α_M²A)⁻¹[B(𝓑,u) - B(u,𝓑)]`.
pub fn rhs_mhd_voigt<T: Real>(
    ws: &mut Workspace<T>,
    state: &SimState<T>,
    params: &VoigtParams<T>,
) -> Result<Derivative<T>> {
    params.validate()?;
    let b = state
        .b
        .as_ref()
        .ok_or_else(|| Error::Contract("MHD-Voigt right-hand side needs a magnetic field".into()))?;
    let (mut du, mut db) = ws.mhd_terms(&state.u, b)?;
    helmholtz_inverse_in_place(&mut du, params.alpha)?;
    helmholtz_inverse_in_place(&mut db, params.alpha_m)?;
    leray_project_in_place(&mut du);
    leray_project_in_place(&mut db);
    Ok(Derivative { du, db: Some(db) })
}

/// Dispatches on `kind`.
pub fn evaluate<T: Real>(
    ws: &mut Workspace<T>,
    kind: RhsKind,
    state: &SimState<T>,
    params: &VoigtParams<T>,
) -> Result<Derivative<T>> {
    match kind {
        RhsKind::Euler => Ok(Derivative {
            du: rhs_euler(ws, state)?,
            db: None,
        }),
        RhsKind::Voigt => Ok(Derivative {
            du: rhs_voigt(ws, state, params)?,
            db: None,
        }),
        RhsKind::MhdVoigt => rhs_mhd_voigt(ws, state, params),
    }
}

/// Pressures recovered from a solenoidal state.
#[derive(Clone, Debug, PartialEq)]
pub struct Pressure<T> {
    /// Fluid pressure `p`, mean-zero.
    pub p: SpectralField<T>,
    /// Magnetic pressure `q`, present for MHD states.
    pub q: Option<SpectralField<T>>,
    /// `Σ_k |2πik q̂_k|²`.
    pub q_gradient_sq: T,
    /// `|(u·∇)𝓑 - (𝓑·∇)u|²`, the scale against which `∇q` is judged.
    pub q_source_sq: T,
}

impl<T: Real> Pressure<T> {
    /// `∇q` vanishes relative to its source, at tolerance `1e-20` on squared norms.
    pub fn q_is_constant(&self) -> bool {
        self.q_gradient_sq <= T::of(1e-20) * self.q_source_sq.max(T::min_positive_value())
    }
}

/// Solves `-Δφ = ∇·F` per mode.
fn poisson_from_divergence<T: Real>(flux: &SpectralField<T>) -> SpectralField<T> {
    let g = flux.grid();
    let d = g.dim();
    let tp = two_pi::<T>();
    let mut out = SpectralField::zeros(g, 1);
    for m in g.modes() {
        let k2 = m.k_squared();
        if k2 == 0 {
            continue;
        }
        let mut kf = Complex::new(T::zero(), T::zero());
        for c in 0..d {
            kf = kf + flux.component(c)[m.index] * T::of(m.k[c] as f64);
        }
        // (2πi k·F̂) / (2π|k|)²
        let div = Complex::new(-kf.im * tp, kf.re * tp);
        out.component_mut(0)[m.index] = div / (tp * tp * T::of(k2 as f64));
    }
    out
}

/// Recovers `p` from `-Δp = ∇·((u·∇)u - (𝓑·∇)𝓑 + ½∇|𝓑|²)` and, for MHD states,
/// `q` from `-Δq = ∇·((u·∇)𝓑 - (𝓑·∇)u)`. The regularization does not enter.
pub fn recover_pressure<T: Real>(ws: &mut Workspace<T>, state: &SimState<T>) -> Result<Pressure<T>> {
    let u = &state.u;
    let mut flux = ws.advection(u, u)?;
    let mut q = None;
    let mut q_gradient_sq = T::zero();
    let mut q_source_sq = T::zero();
    if let Some(b) = &state.b {
        let bb = ws.advection(b, b)?;
        flux.axpy(-T::one(), &bb);
        let mag = ws.square_magnitude(b);
        let grad = crate::spectral::gradient(&mag).remove(0);
        flux.axpy(T::of(0.5), &grad);

        let mut source = ws.advection(u, b)?;
        source.axpy(-T::one(), &ws.advection(b, u)?);
        let qf = poisson_from_divergence(&source);
        q_gradient_sq = crate::spectral::gradient(&qf)[0].norm_sq();
        q_source_sq = source.norm_sq();
        q = Some(qf);
    }
    Ok(Pressure {
        p: poisson_from_divergence(&flux),
        q,
        q_gradient_sq,
        q_source_sq,
    })
}

/// Sharp spectral-ball truncation `|k| ≤ n_prime` of every field in the state.
pub fn galerkin_truncate<T: Real>(state: &SimState<T>, n_prime: usize) -> Result<SimState<T>> {
    let n = state.grid().n();
    if n_prime > n / 2 {
        return Err(Error::Config(format!("Galerkin cutoff {n_prime} exceeds n/2 = {}", n / 2)));
    }
    let rule = Truncation::SharpRadius(n_prime as f64);
    let mut out = state.clone();
    dealias_in_place(&mut out.u, rule);
    if let Some(b) = out.b.as_mut() {
        dealias_in_place(b, rule);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::{random_solenoidal, taylor_green};
    use crate::oracle;
    use crate::spectral::{partial, Transform};

    fn rel(a: f64, scale: f64) -> f64 {
        if scale == 0.0 {
            a
        } else {
            a / scale
        }
    }

    #[test]
    fn zero_and_taylor_green() {
        let g = GridSpec::new(2, 16).unwrap();
        let mut ws = Workspace::<f64>::new(g);
        let z = SpectralField::zeros_vector(g);
        assert_eq!(ws.nonlinear_term(&z).unwrap().max_abs(), 0.0);
        let tg = taylor_green::<f64>(g);
        assert!(ws.nonlinear_term(&tg).unwrap().max_abs() < 1e-12);
        let s = SimState::new(tg);
        assert!(rhs_euler(&mut ws, &s).unwrap().max_abs() < 1e-12);
        assert!(rhs_voigt(&mut ws, &s, &VoigtParams::new(0.3, 0.0).unwrap()).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn matches_convolution_oracle() {
        for (dim, n) in [(2, 8), (3, 8), (2, 12)] {
            let g = GridSpec::new(dim, n).unwrap();
            let mut ws = Workspace::<f64>::new(g);
            let u = random_solenoidal::<f64>(g, 99);
            let fast = ws.nonlinear_term(&u).unwrap();
            let slow = oracle::convolution_nonlinear_term(&u, Truncation::TwoThirds).unwrap();
            assert!(fast.sub(&slow).max_abs() <= 1e-12 * slow.max_abs(), "dim {dim} n {n}");
        }
    }

    #[test]
    fn rejects_non_solenoidal_input() {
        let g = GridSpec::new(2, 8).unwrap();
        let mut ws = Workspace::<f64>::new(g);
        let f = crate::init::random_field::<f64>(g, 2, 1);
        assert!(matches!(ws.nonlinear_term(&f), Err(Error::Contract(_))));
    }

    #[test]
    fn voigt_reduces_to_euler_and_halves_unit_mode() {
        let g = GridSpec::new(3, 8).unwrap();
        let mut ws = Workspace::<f64>::new(g);
        let s = SimState::new(random_solenoidal::<f64>(g, 5));
        let e = rhs_euler(&mut ws, &s).unwrap();
        let v = rhs_voigt(&mut ws, &s, &VoigtParams::euler()).unwrap();
        assert_eq!(e, v);
        let a = 1.0 / (2.0 * std::f64::consts::PI);
        let v = rhs_voigt(&mut ws, &s, &VoigtParams::new(a, 0.0).unwrap()).unwrap();
        let ke = e.mode(&[1, 0, 0]);
        let kv = v.mode(&[1, 0, 0]);
        for (x, y) in ke.iter().zip(&kv) {
            assert!((x * 0.5 - y).norm() < 1e-14);
        }
        assert!(v.divergence_defect() < 1e-12);
        assert_eq!(v.component(0)[0], Complex::new(0.0, 0.0));
    }

    #[test]
    fn mhd_fixed_point_and_reduction() {
        let g = GridSpec::new(3, 8).unwrap();
        let mut ws = Workspace::<f64>::new(g);
        let p = VoigtParams::new(0.1, 0.05).unwrap();
        let u = random_solenoidal::<f64>(g, 8);
        let d = rhs_mhd_voigt(&mut ws, &SimState::with_magnetic(u.clone(), u.clone()), &p).unwrap();
        assert_eq!(d.du.max_abs(), 0.0);
        assert_eq!(d.db.unwrap().max_abs(), 0.0);

        let d = rhs_mhd_voigt(&mut ws, &SimState::with_magnetic(u.clone(), SpectralField::zeros_vector(g)), &p).unwrap();
        let v = rhs_voigt(&mut ws, &SimState::new(u.clone()), &p).unwrap();
        assert!(d.du.sub(&v).max_abs() <= 1e-14 * v.max_abs());
        assert_eq!(d.db.unwrap().max_abs(), 0.0);

        assert!(matches!(rhs_mhd_voigt(&mut ws, &SimState::new(u), &p), Err(Error::Contract(_))));
    }

    #[test]
    fn mhd_matches_oracle_assembly() {
        let g = GridSpec::new(3, 8).unwrap();
        let mut ws = Workspace::<f64>::new(g);
        let p = VoigtParams::new(0.1, 0.05).unwrap();
        let u = random_solenoidal::<f64>(g, 21);
        let b = random_solenoidal::<f64>(g, 22);
        let d = rhs_mhd_voigt(&mut ws, &SimState::with_magnetic(u.clone(), b.clone()), &p).unwrap();
        let cut = Truncation::TwoThirds;
        let bb = oracle::convolution_bilinear(&b, &b, cut).unwrap();
        let uu = oracle::convolution_bilinear(&u, &u, cut).unwrap();
        let bu = oracle::convolution_bilinear(&b, &u, cut).unwrap();
        let ub = oracle::convolution_bilinear(&u, &b, cut).unwrap();
        let du = crate::spectral::helmholtz_inverse(&bb.sub(&uu), 0.1).unwrap();
        let db = crate::spectral::helmholtz_inverse(&bu.sub(&ub), 0.05).unwrap();
        assert!(d.du.sub(&du).max_abs() <= 1e-12 * du.max_abs());
        assert!(d.db.unwrap().sub(&db).max_abs() <= 1e-12 * db.max_abs());
    }

    #[test]
    fn bilinear_identities() {
        let g = GridSpec::new(3, 12).unwrap();
        let mut ws = Workspace::<f64>::new(g);
        let w1 = random_solenoidal::<f64>(g, 1);
        let w2 = random_solenoidal::<f64>(g, 2);
        let w3 = random_solenoidal::<f64>(g, 3);
        let b = ws.nonlinear_term(&w1).unwrap();
        assert!(rel(b.inner(&w1).abs(), b.norm_sq().sqrt() * w1.norm_sq().sqrt()) < 1e-11);
        let lhs = ws.bilinear(&w1, &w2).unwrap().inner(&w3);
        let rhs = ws.bilinear(&w1, &w3).unwrap().inner(&w2);
        assert!(rel((lhs + rhs).abs(), lhs.abs().max(rhs.abs())) < 1e-11);
    }

    #[test]
    fn rotational_form_differs_by_a_gradient() {
        // (u·∇)u = ω×u + ∇|u|²/2, so projecting the rotational form reproduces B(u,u).
        let g = GridSpec::new(3, 12).unwrap();
        let mut ws = Workspace::<f64>::new(g);
        let u = random_solenoidal::<f64>(g, 4);
        let b = ws.nonlinear_term(&u).unwrap();
        let mut t = Transform::new(g);
        let uphys = t.to_physical(&u).unwrap();
        let grads: Vec<_> = (0..3).map(|j| t.to_physical(&partial(&u, j)).unwrap()).collect();
        // ω_i = ε_ijk ∂_j u_k
        let len = g.physical_len();
        let d = |j: usize, k: usize, p: usize| grads[j].component(k)[p];
        let mut rot = crate::spectral::PhysicalField::<f64>::zeros(g, 3);
        for p in 0..len {
            let w = [d(1, 2, p) - d(2, 1, p), d(2, 0, p) - d(0, 2, p), d(0, 1, p) - d(1, 0, p)];
            let v = [uphys.component(0)[p], uphys.component(1)[p], uphys.component(2)[p]];
            rot.component_mut(0)[p] = w[1] * v[2] - w[2] * v[1];
            rot.component_mut(1)[p] = w[2] * v[0] - w[0] * v[2];
            rot.component_mut(2)[p] = w[0] * v[1] - w[1] * v[0];
        }
        let mut r = t.to_spectral(&rot).unwrap();
        dealias_in_place(&mut r, Truncation::TwoThirds);
        leray_project_in_place(&mut r);
        assert!(r.sub(&b).max_abs() <= 1e-12 * b.max_abs());
    }

    #[test]
    fn taylor_green_pressure() {
        let g = GridSpec::new(2, 16).unwrap();
        let mut ws = Workspace::<f64>::new(g);
        let pr = recover_pressure(&mut ws, &SimState::new(taylor_green::<f64>(g))).unwrap();
        for m in g.modes() {
            let z = pr.p.component(0)[m.index];
            let on_support = (m.k[0].abs() == 2 && m.k[1] == 0) || (m.k[0] == 0 && m.k[1].abs() == 2);
            if !on_support {
                assert!(z.norm() < 1e-14, "{:?}", m.k);
            }
        }
        // independent route: sample (u·∇)u = (π sin 4πx, π sin 4πy) pointwise and invert -Δp = ∇·F
        let tp = std::f64::consts::TAU;
        let pi = std::f64::consts::PI;
        let flux = crate::spectral::PhysicalField::<f64>::from_fn(g, 2, |x| {
            vec![pi * (2.0 * tp * x[0]).sin(), pi * (2.0 * tp * x[1]).sin()]
        });
        let flux = Transform::new(g).to_spectral(&flux).unwrap();
        let direct = poisson_from_divergence(&flux);
        assert!(direct.sub(&pr.p).max_abs() < 1e-14);
        let phys = Transform::new(g).to_physical(&pr.p).unwrap();
        for idx in 0..g.physical_len() {
            let x = crate::spectral::point(g, idx);
            let expected = ((2.0 * tp * x[0]).cos() + (2.0 * tp * x[1]).cos()) / 4.0;
            assert!((phys.component(0)[idx] - expected).abs() < 1e-13);
        }
        let z = recover_pressure(&mut ws, &SimState::new(SpectralField::zeros_vector(g))).unwrap();
        assert_eq!(z.p.max_abs(), 0.0);
    }

    #[test]
    fn magnetic_pressure_is_constant() {
        let g = GridSpec::new(3, 8).unwrap();
        let mut ws = Workspace::<f64>::new(g);
        let u = random_solenoidal::<f64>(g, 30);
        let b = random_solenoidal::<f64>(g, 31);
        let pr = recover_pressure(&mut ws, &SimState::with_magnetic(u.clone(), b)).unwrap();
        assert!(pr.q_source_sq > 0.0);
        assert!(pr.q_is_constant(), "{} vs {}", pr.q_gradient_sq, pr.q_source_sq);
        let pr = recover_pressure(&mut ws, &SimState::with_magnetic(u.clone(), u)).unwrap();
        assert!(pr.q_is_constant());
    }

    #[test]
    fn galerkin_truncation() {
        let g = GridSpec::new(3, 16).unwrap();
        let s = SimState::new(random_solenoidal::<f64>(g, 3));
        assert!(galerkin_truncate(&s, 9).is_err());
        let t = galerkin_truncate(&s, 3).unwrap();
        assert_eq!(galerkin_truncate(&t, 3).unwrap(), t);
        for m in g.modes() {
            if m.k_norm() > 3.0 {
                assert_eq!(t.u.component(0)[m.index], Complex::new(0.0, 0.0));
            } else {
                assert_eq!(t.u.component(0)[m.index], s.u.component(0)[m.index]);
            }
        }
    }
}
