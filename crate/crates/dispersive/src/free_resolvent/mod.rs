//! Closed-form free resolvent kernels, the radial bound integrals and the
//! free propagator kernel.

mod bounds;
mod kernel;
mod propagator;
mod types;

pub use bounds::{
    bound_integral_a, bound_integral_a_direct, bound_integral_b, sup_bound_integral_a, sup_bound_integral_b,
    sup_radii,
};
pub use kernel::{free_kernel, free_kernel_radial};
pub use propagator::{
    appendix_decay_fit, appendix_sups, free_propagator_kernel, free_propagator_kernel_with, propagator_fourier_3d,
    propagator_radial, region_distances, OscillatoryQuadrature,
};
pub use types::{
    integer_split, smoothstep, smoothstep_derivative, ComplexFrequency, CutoffKind, CutoffSpec, LebesgueExponent,
    Sign, WeightParams,
};
