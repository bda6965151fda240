use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lippmann_schwinger::OperatorKernel;
use crate::{bracket, norm3, Point};

/// Sample points for propagator kernels, each carrying the volume it stands
/// for, and the exponent of the diagonal weights `⟨x⟩^{−σα}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationGrid {
    pub points: Vec<Point>,
    pub volumes: Vec<f64>,
    pub weight_exponent: f64,
}

impl EvaluationGrid {
    pub fn new(points: Vec<Point>, volumes: Vec<f64>, weight_exponent: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::domain("grid.points", "must be nonempty"));
        }
        if volumes.len() != points.len() || volumes.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::domain("grid.volumes", "one positive volume per point"));
        }
        if !weight_exponent.is_finite() || weight_exponent < 0.0 {
            return Err(Error::domain("grid.weight_exponent", "must be finite and >= 0"));
        }
        Ok(Self { points, volumes, weight_exponent })
    }

    /// One point per spherical shell: radii geometric between `r_min` and
    /// `r_max`, directions on a golden spiral, volumes of the shells between
    /// geometric midpoints. Distinct radii keep partial-wave sums short.
    pub fn shells(r_min: f64, r_max: f64, count: usize, weight_exponent: f64) -> Result<Self> {
        if !(r_min > 0.0 && r_max > r_min) || count < 2 {
            return Err(Error::domain("grid", "need 0 < r_min < r_max and at least two shells"));
        }
        let ratio = (r_max / r_min).powf(1.0 / (count - 1) as f64);
        let radii: Vec<f64> = (0..count).map(|i| r_min * ratio.powi(i as i32)).collect();
        let golden = PI * (3.0 - 5f64.sqrt());
        let points = radii
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                let s = (1.0 - z * z).sqrt();
                let phi = golden * i as f64;
                [r * s * phi.cos(), r * s * phi.sin(), r * z]
            })
            .collect();
        let edge = |i: usize| if i == 0 { 0.0 } else { (radii[i - 1] * radii[i]).sqrt() };
        let volumes = (0..count)
            .map(|i| {
                let hi = if i + 1 == count { radii[i] * ratio.sqrt() } else { edge(i + 1) };
                4.0 * PI / 3.0 * (hi.powi(3) - edge(i).powi(3))
            })
            .collect();
        Self::new(points, volumes, weight_exponent)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest `|x|` on the grid.
    pub fn reach(&self) -> f64 {
        self.points.iter().map(norm3).fold(0.0, f64::max)
    }

    /// The weights only act when the grid extends well past the potential.
    pub fn check_reach(&self, r_trunc: f64) -> Result<()> {
        if self.reach() < 2.0 * r_trunc * (1.0 - 1e-12) {
            return Err(Error::Usage(format!(
                "grid reaches |x| = {:.3}, needs at least 2 R_trunc = {:.3}",
                self.reach(),
                2.0 * r_trunc
            )));
        }
        Ok(())
    }

    pub fn with_weight_exponent(&self, weight_exponent: f64) -> Self {
        Self { weight_exponent, ..self.clone() }
    }

    /// `⟨x_i⟩^{−weight_exponent}`.
    pub fn weight_factors(&self) -> Vec<f64> {
        self.points.iter().map(|p| bracket(norm3(p)).powf(-self.weight_exponent)).collect()
    }

    /// `⟨x⟩^{−e} K ⟨y⟩^{−e}` as an operator kernel with the grid volumes.
    pub fn weighted_kernel(&self, raw: &DMatrix<Complex64>) -> Result<OperatorKernel> {
        let f = self.weight_factors();
        let values = DMatrix::from_fn(raw.nrows(), raw.ncols(), |i, j| raw[(i, j)] * (f[i] * f[j]));
        OperatorKernel::square(self.points.clone(), values, self.volumes.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shell_volumes_fill_the_outer_ball() {
        let g = EvaluationGrid::shells(0.25, 4.0, 12, 0.0).unwrap();
        let total: f64 = g.volumes.iter().sum();
        let outer = 4.0 * (16f64).powf(1.0 / 11.0).sqrt();
        assert!((total - 4.0 * PI / 3.0 * outer.powi(3)).abs() < 1e-9 * total);
        assert!((norm3(&g.points[0]) - 0.25).abs() < 1e-12);
        assert!((g.reach() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn reach_guard() {
        let g = EvaluationGrid::shells(0.5, 3.0, 6, 0.0).unwrap();
        assert!(g.check_reach(1.5).is_ok());
        assert!(matches!(g.check_reach(2.0), Err(Error::Usage(_))));
    }

    #[test]
    fn weights_scale_entries() {
        let g = EvaluationGrid::shells(1.0, 2.0, 2, 1.0).unwrap();
        let raw = DMatrix::from_element(2, 2, Complex64::new(1.0, 0.0));
        let k = g.weighted_kernel(&raw).unwrap();
        let (a, b) = (bracket(1.0), bracket(2.0));
        assert!((k.values[(0, 1)].re - 1.0 / (a * b)).abs() < 1e-15);
    }
}
