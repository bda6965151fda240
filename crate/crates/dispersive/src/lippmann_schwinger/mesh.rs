use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, spherical_rule};
use crate::{dist3, norm3, Point};

/// Product quadrature on the ball of radius `r_trunc`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureMesh {
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
    pub r_trunc: f64,
    pub radial_counts: (usize, usize),
    /// `c_i` such that `∫ |x_i − y|^{−1} f(y) dy ≈ Σ_{j≠i} w_j f_j / |x_i − x_j| + c_i f_i`.
    pub diag_correction: Vec<f64>,
}

impl QuadratureMesh {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫_{ball} |x_i − y|^{−1} f(y) dy` with the node singularity subtracted.
    pub fn coulomb(&self, i: usize, f: &[f64]) -> f64 {
        let xi = &self.nodes[i];
        let mut acc = self.diag_correction[i] * f[i];
        for (j, (xj, &w)) in self.nodes.iter().zip(&self.weights).enumerate() {
            if j != i {
                acc += w * f[j] / dist3(xi, xj);
            }
        }
        acc
    }

    pub fn integrate<F: Fn(&Point) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }
}

/// `∫_{|y|<R} |x − y|^{−1} dy` for `|x| ≤ R`.
pub fn ball_newton_potential(r_trunc: f64, x: &Point) -> f64 {
    let r = norm3(x);
    2.0 * PI * (r_trunc * r_trunc - r * r / 3.0)
}

pub fn build_mesh(r_trunc: f64, n_r: usize, n_angular: usize) -> Result<QuadratureMesh> {
    if !(r_trunc > 0.0) {
        return Err(Error::domain("r_trunc", format!("must be positive, got {r_trunc}")));
    }
    if n_r < 4 {
        return Err(Error::domain("n_r", format!("need at least 4 radial nodes, got {n_r}")));
    }
    let sphere = spherical_rule(n_angular)?;
    let radial = gauss_legendre(n_r, 0.0, r_trunc);
    let mut nodes = Vec::with_capacity(n_r * n_angular);
    let mut weights = Vec::with_capacity(n_r * n_angular);
    for (&r, &wr) in radial.nodes.iter().zip(&radial.weights) {
        for (d, &wa) in sphere.directions.iter().zip(&sphere.weights) {
            nodes.push([r * d[0], r * d[1], r * d[2]]);
            weights.push(wr * r * r * wa);
        }
    }
    let diag_correction = (0..nodes.len())
        .map(|i| {
            let off: f64 = nodes
                .iter()
                .zip(&weights)
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, (x, w))| w / dist3(&nodes[i], x))
                .sum();
            ball_newton_potential(r_trunc, &nodes[i]) - off
        })
        .collect();
    Ok(QuadratureMesh { nodes, weights, r_trunc, radial_counts: (n_r, n_angular), diag_correction })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bracket;

    #[test]
    fn volume_is_exact() {
        let m = build_mesh(8.0, 16, 26).unwrap();
        let vol: f64 = m.weights.iter().sum();
        let exact = 4.0 / 3.0 * PI * 512.0;
        assert!((vol - exact).abs() / exact < 1e-3);
        assert_eq!(m.len(), 16 * 26);
        assert!(m.nodes.iter().all(|x| norm3(x) < 8.0));
    }

    #[test]
    fn bracket_power_matches_radial_oracle() {
        let m = build_mesh(8.0, 16, 26).unwrap();
        let v = m.integrate(|x| bracket(norm3(x)).powi(-4));
        let g = |r: f64| 4.0 * PI * r * r / (1.0 + r * r).powi(2);
        let oracle = quadrature::double_exponential::integrate(g, 0.0, 8.0, 1e-12).integral;
        assert!((v - oracle).abs() / oracle < 1e-3, "{v} vs {oracle}");
    }

    #[test]
    fn coulomb_against_centred_gaussian() {
        let m = build_mesh(8.0, 24, 50).unwrap();
        // node closest to the origin; Gaussian of width 1 around it
        let i = (0..m.len()).min_by(|&a, &b| norm3(&m.nodes[a]).total_cmp(&norm3(&m.nodes[b]))).unwrap();
        let xi = m.nodes[i];
        let f: Vec<f64> = m.nodes.iter().map(|y| (-dist3(y, &xi).powi(2)).exp()).collect();
        let v = m.coulomb(i, &f);
        // ∫ e^{−ρ²}/ρ · 4πρ² dρ = 2π; the ball misses a tail below e^{−60}
        let oracle = 2.0 * PI;
        assert!((v - oracle).abs() / oracle < 1e-2, "{v} vs {oracle}");
    }

    #[test]
    fn unsupported_angular_size() {
        assert!(matches!(build_mesh(1.0, 8, 7), Err(Error::Config(_))));
        assert!(matches!(build_mesh(1.0, 3, 26), Err(Error::Domain { .. })));
    }
}
