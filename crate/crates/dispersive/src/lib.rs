//! Resolvent kernels of `-Δ + V` in three dimensions, their Lippmann–Schwinger
//! discretization, spectral synthesis of wave propagators and weighted norm
//! estimation.

pub mod error;
pub mod free_resolvent;
pub mod lippmann_schwinger;
pub mod norm_estimation;
pub mod quadrature;
pub mod spectral_synthesis;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// A point of R³.
pub type Point = [f64; 3];

pub(crate) fn norm3(p: &Point) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
}

pub(crate) fn dist3(p: &Point, q: &Point) -> f64 {
    let d = [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
    norm3(&d)
}

/// Japanese bracket `(1 + r²)^{1/2}`.
pub fn bracket(r: f64) -> f64 {
    (1.0 + r * r).sqrt()
}
