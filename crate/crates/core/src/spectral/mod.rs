//! Fourier representation of mean-zero periodic fields on the unit torus and
//! the operators that are diagonal in that basis.

mod field;
mod grid;
mod norms;
mod ops;
mod transform;

pub use field::{point, PhysicalField, SpectralField};
pub use grid::{GridSpec, Mode, ModeIter};
pub use norms::{gevrey_norm, norm, sobolev_norm, sobolev_seminorm, GevreyNorm, NormSpec, GEVREY_LOG_BOUND};
pub use ops::{
    dealias_in_place, dealias_truncate, divergence, gradient, helmholtz_apply, helmholtz_inverse,
    helmholtz_inverse_in_place, laplacian, leray_project, leray_project_in_place, partial, stokes_eigenvalue,
    Truncation,
};
pub use transform::Transform;

/// Convenience wrapper: forward transform of physical samples.
pub fn transform_to_spectral<T: crate::Real>(
    samples: &PhysicalField<T>,
) -> crate::error::Result<SpectralField<T>> {
    Transform::new(samples.grid()).to_spectral(samples)
}

/// Convenience wrapper: inverse transform to physical samples.
pub fn transform_to_physical<T: crate::Real>(
    field: &SpectralField<T>,
) -> crate::error::Result<PhysicalField<T>> {
    Transform::new(field.grid()).to_physical(field)
}
