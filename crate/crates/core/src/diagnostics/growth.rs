//! Power-law versus exponential growth of `H^m` norms along a run.

use serde::{Deserialize, Serialize};

use super::radius::linear_fit;
use super::record::DiagnosticsRecord;
use crate::error::{Error, Result};

/// Algebraic growth exponent bound for `‖u(t)‖_{H^m}`: `p(1) = 1`, `p(2) = 2`,
/// `p(m) = 5 (3/2)^{m-3} - 1` for `m ≥ 3`.
pub fn growth_bound(m: u32) -> f64 {
    match m {
        0 | 1 => 1.0,
        2 => 2.0,
        _ => 5.0 * 1.5f64.powi(m as i32 - 3) - 1.0,
    }
}

/// Least-squares fit of `log y = c + e·x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub exponent: f64,
    pub log_prefactor: f64,
    /// Residual sum of squares in `log y`.
    pub rss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HmGrowth {
    pub m: u32,
    /// `log ‖u‖ ~ q log(1+|t|)`
    pub power_law: GrowthFit,
    /// `log ‖u‖ ~ γ |t|`
    pub exponential: GrowthFit,
    /// `n · ln(rss_exp / rss_power)`; positive favours the power law.
    pub likelihood_ratio: f64,
    pub prefers_power_law: bool,
    pub bound: f64,
    /// `q ≤ p(m) + margin`
    pub within_bound: bool,
    /// `(max - min) / first` of the monitored norm.
    pub relative_variation: f64,
    /// Whether the norm stayed constant to `constancy_tol`.
    pub constant: bool,
}

fn fit(x: &[f64], y: &[f64]) -> GrowthFit {
    let (c, e, _, _) = linear_fit(x, y);
    let rss = x.iter().zip(y).map(|(a, b)| (b - c - e * a).powi(2)).sum();
    GrowthFit {
        exponent: e,
        log_prefactor: c,
        rss,
    }
}

/// Classifies the growth of `‖u(t)‖_{H^m}` over a single run.
///
/// For `m = 1` the monitored quantity is the α-weighted norm
/// `(|u|² + α²‖∇u‖²)^{1/2}` taken from the modified energy, which the
/// Voigt dynamics conserves exactly; for `m ≥ 2` it is the `H^m` norm stored in
/// the records.
pub fn hm_growth_monitor(records: &[DiagnosticsRecord], m: u32, margin: f64, constancy_tol: f64) -> Result<HmGrowth> {
    if records.len() < 3 {
        return Err(Error::Config(format!("growth fit needs at least 3 records, got {}", records.len())));
    }
    let t0 = records[0].time;
    let mut values = Vec::with_capacity(records.len());
    for r in records {
        let v = if m == 1 {
            r.modified_energy.sqrt()
        } else {
            r.hm_norm(m as f64)
                .ok_or_else(|| Error::Config(format!("records carry no H^{m} norm")))?
        };
        values.push(v);
    }
    if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Config("growth fit needs positive finite norms".into()));
    }
    let ts: Vec<f64> = records.iter().map(|r| (r.time - t0).abs()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let xs_power: Vec<f64> = ts.iter().map(|t| (1.0 + t).ln()).collect();
    let power_law = fit(&xs_power, &ys);
    let exponential = fit(&ts, &ys);
    let n = ys.len() as f64;
    let tiny = f64::MIN_POSITIVE;
    let likelihood_ratio = n * ((exponential.rss + tiny) / (power_law.rss + tiny)).ln();
    let bound = growth_bound(m);
    let max = values.iter().cloned().fold(f64::MIN, f64::max);
    let min = values.iter().cloned().fold(f64::MAX, f64::min);
    let relative_variation = (max - min) / values[0];
    Ok(HmGrowth {
        m,
        power_law,
        exponential,
        likelihood_ratio,
        prefers_power_law: likelihood_ratio >= 0.0,
        bound,
        within_bound: power_law.exponent.is_finite() && power_law.exponent <= bound + margin,
        relative_variation,
        constant: relative_variation <= constancy_tol,
    })
}
