//! Self-check of the fast spectral paths against the brute-force oracles on tiny grids.

use serde::Serialize;

use crate::dynamics::{rhs_voigt, SimState, VoigtParams, Workspace};
use crate::error::Result;
use crate::init::{random_analytic, random_field, random_solenoidal};
use crate::integrate::{step, Method};
use crate::oracle::{convolution_bilinear, convolution_nonlinear_term, direct_inner, direct_norm_sums, fd_time_derivative};
use crate::spectral::{norm, GridSpec, NormSpec, Transform, Truncation};
use crate::dynamics::RhsKind;

/// Outcome of one check: the worst value seen against its tolerance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: &str, worst: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            worst,
            tolerance,
            passed: worst <= tolerance,
        }
    }
}

fn rel(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

/// Runs every check with `seeds` random draws per grid.
pub fn verification_suite(seeds: u64) -> Result<Vec<Check>> {
    let grids: Vec<GridSpec> = [(2, 4), (2, 6), (2, 8), (3, 4), (3, 6), (3, 8)]
        .iter()
        .map(|&(d, n)| GridSpec::tiny(d, n))
        .collect::<Result<_>>()?;
    let mut checks = Vec::new();

    let (mut nl, mut bil, mut energy, mut antisym, mut inner, mut norms, mut round) = (0f64, 0f64, 0f64, 0f64, 0f64, 0f64, 0f64);
    for &g in &grids {
        let mut ws = Workspace::<f64>::new(g);
        let mut tr = Transform::<f64>::new(g);
        for seed in 0..seeds {
            let u = random_solenoidal::<f64>(g, seed);
            let v = random_solenoidal::<f64>(g, seed + 1000);
            let w = random_solenoidal::<f64>(g, seed + 2000);

            let fast = ws.nonlinear_term(&u)?;
            let slow = convolution_nonlinear_term(&u, Truncation::TwoThirds)?;
            nl = nl.max(rel(fast.sub(&slow).max_abs(), slow.max_abs()));

            let fast = ws.bilinear(&u, &v)?;
            let slow = convolution_bilinear(&u, &v, Truncation::TwoThirds)?;
            bil = bil.max(rel(fast.sub(&slow).max_abs(), slow.max_abs()));

            let buu = ws.nonlinear_term(&u)?;
            energy = energy.max(rel(buu.inner(&u).abs(), buu.norm_sq().sqrt() * u.norm_sq().sqrt()));
            let a = ws.bilinear(&u, &v)?.inner(&w);
            let b = ws.bilinear(&u, &w)?.inner(&v);
            antisym = antisym.max(rel((a + b).abs(), a.abs().max(b.abs())));

            let dense = direct_inner(&u, &v)?;
            inner = inner.max(rel((u.inner(&v) - dense).abs(), u.norm_sq().sqrt() * v.norm_sq().sqrt()));
            for spec in [
                NormSpec::Sobolev { m: 1.5 },
                NormSpec::Seminorm { m: 2.0 },
                NormSpec::Gevrey { r: 0.5, tau: 0.05 },
            ] {
                let fast = norm(&u, spec);
                let slow = direct_norm_sums(&u, spec)?;
                norms = norms.max(rel((fast - slow).abs(), slow));
            }

            let f = random_field::<f64>(g, 2, seed);
            let phys = tr.to_physical(&f)?;
            let back = tr.to_spectral(&phys)?;
            round = round.max(rel(back.sub(&f).max_abs(), f.max_abs()));
        }
    }
    checks.push(Check::new("nonlinear_term_vs_convolution", nl, 1e-12));
    checks.push(Check::new("bilinear_vs_convolution", bil, 1e-12));
    checks.push(Check::new("energy_orthogonality", energy, 1e-12));
    checks.push(Check::new("antisymmetry", antisym, 1e-11));
    checks.push(Check::new("inner_product_vs_direct_sum", inner, 1e-13));
    checks.push(Check::new("norms_vs_direct_sum", norms, 1e-12));
    checks.push(Check::new("transform_round_trip", round, 1e-13));

    // centred difference along an integrated trajectory matches the oracle vector field
    let g = GridSpec::new(2, 8)?;
    let alpha = 0.1;
    let p = VoigtParams::new(alpha, 0.0)?;
    let mut ws = Workspace::<f64>::new(g);
    let start = SimState::new(random_analytic::<f64>(g, 5, 0.1, 0.5)?);
    let scale = rhs_voigt(&mut ws, &start, &p)?.norm_sq().sqrt();
    let mut worst: f64 = 0.0;
    let mut prev = f64::NAN;
    let mut order: f64 = f64::INFINITY;
    for h in [2e-3, 1e-3] {
        let fwd = step(&mut ws, &start, &p, RhsKind::Voigt, h, Method::Rk4).map_err(into_error)?;
        let bwd = step(&mut ws, &start, &p, RhsKind::Voigt, -h, Method::Rk4).map_err(into_error)?;
        let r = fd_time_derivative([&bwd.u, &start.u, &fwd.u], h, alpha)? / scale;
        worst = worst.max(r);
        if prev.is_finite() {
            order = (prev / r).log2();
        }
        prev = r;
    }
    checks.push(Check::new("centred_difference_residual", worst, 1e-5));
    checks.push(Check::new("centred_difference_order_deficit", (2.0 - order).max(0.0), 0.2));
    Ok(checks)
}

fn into_error<T: crate::Real>(e: crate::integrate::IntegrationError<T>) -> crate::Error {
    match e {
        crate::integrate::IntegrationError::Model(e) => e,
        other => crate::Error::Contract(other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        for c in verification_suite(3).unwrap() {
            assert!(c.passed, "{c:?}");
        }
    }
}
