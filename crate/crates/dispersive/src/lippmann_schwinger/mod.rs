//! Perturbed resolvent `R(λ ± iε) = (−Δ + V − (λ ± iε)²)^{−1}` through the
//! Lippmann–Schwinger identity `R = R₀ − R₀VR`.

mod born;
mod checks;
mod kernel;
mod mesh;
mod mesh_solver;
mod potential;
mod radial;

use nalgebra::DMatrix;
use num_complex::Complex64;

pub use born::born_diagonal;
pub use checks::{
    birman_schwinger_check, weighted_resolvent_norm, Backend, BirmanSchwingerEntry, BirmanSchwingerReport, MeshParams,
    RadialParams, ResolventOperator, WeightPair,
};
pub use kernel::OperatorKernel;
pub use mesh::{ball_newton_potential, build_mesh, QuadratureMesh};
pub use mesh_solver::{
    free_cross_matrix, free_mesh_matrix, resolvent_derivative, solve_resolvent, solve_resolvent_shared, MeshResolvent,
    NEAR_RESONANCE_THRESHOLD,
};
pub use potential::{PotentialFamily, PotentialSpec};
pub use radial::{riccati_hankel_derivatives, ChannelScan, ChannelSolution, RadialResolvent, RadialSettings};

use crate::error::{Error, Result};
use crate::free_resolvent::ComplexFrequency;
use crate::Point;

/// Read-only access to a solved resolvent at one spectral point.
pub trait ResolventHandle: Send + Sync {
    fn frequency(&self) -> ComplexFrequency;

    fn potential(&self) -> &PotentialSpec;

    /// Kernel of `∂_λ^k (R − R₀)` between arbitrary points.
    fn scattered_kernel(&self, rows: &[Point], cols: &[Point], k: u32) -> Result<DMatrix<Complex64>>;

    /// Same quantity through `−R₀VR₀ + R₀VRVR₀`, where available.
    fn scattered_kernel_born(&self, _rows: &[Point], _cols: &[Point], _k: u32) -> Result<DMatrix<Complex64>> {
        Err(Error::Usage("second-Born route not available for this backend".into()))
    }
}
