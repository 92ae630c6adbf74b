//! Numerical kernels for planar quasiconformal analysis.
//!
//! Everything lives on a uniform periodic grid over a centered square box
//! ([`grid_field`]) or on sampled closed curves ([`domain_geometry`]). The
//! transforms of [`singular_transforms`] drive the Beltrami solver; the
//! remaining modules measure boundary flatness and fractional smoothness.

pub mod beltrami_solver;
pub mod domain_geometry;
pub mod error;
mod fft;
pub mod grid_field;
pub mod linalg;
pub mod multiscale_betas;
pub mod norm_estimators;
pub mod quadrature;
pub mod schwarz_riemann;
pub mod singular_transforms;

pub use error::{QcError, Result};
pub use num_complex::Complex64 as C64;
