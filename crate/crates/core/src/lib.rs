//! Pseudo-spectral laboratory for the inviscid Euler-Voigt and MHD-Voigt
//! equations on the periodic unit torus.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the aliases at the
//! crate root fix the scalar to `f64`, which is what the solvers and the CLI use.

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod init;
pub mod integrate;
pub mod io;
pub mod oracle;
pub mod scalar;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision spectral field.
pub type Field = spectral::SpectralField<f64>;
/// Single-precision spectral field.
pub type Field32 = spectral::SpectralField<f32>;
