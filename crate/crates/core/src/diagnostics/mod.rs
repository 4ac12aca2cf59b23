//! Monitors for conservation, regularity growth, analyticity radius,
//! `α → 0` convergence and the blow-up indicator.

mod growth;
mod radius;
mod record;
mod studies;

pub use growth::{growth_bound, hm_growth_monitor, GrowthFit, HmGrowth};
pub use radius::{
    estimate_radius, spectrum_shells, synthetic_exponential_field, FitWindow, RadiusFit, Shell, MIN_FIT_SHELLS,
    SHELL_ENERGY_FLOOR,
};
pub use record::{mhd_modified_energy, modified_energy, record, DiagnosticsRecord, DiagnosticsSpec};
pub use studies::{
    blowup_sweep, convergence_study, galerkin_cauchy_test, radius_series, BlowupReport, BlowupVerdict,
    CauchyReport, ConvergenceReport, ConvergenceRow, RadiusSeries, StudyError, SweepConfig,
};
