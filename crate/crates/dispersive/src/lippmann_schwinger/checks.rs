use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::mesh::{build_mesh, QuadratureMesh};
use super::mesh_solver::{free_mesh_matrix, MeshResolvent};
use super::potential::PotentialSpec;
use super::radial::{RadialResolvent, RadialSettings};
use crate::error::{Error, Result};
use crate::free_resolvent::{ComplexFrequency, Sign};
use crate::norm_estimation::{dense_top_singular_value, fit_decay, DecayFit, FitModel};
use crate::{bracket, norm3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshParams {
    pub r_trunc: f64,
    pub n_r: usize,
    pub n_angular: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialParams {
    pub r_max: f64,
    pub settings: RadialSettings,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Backend {
    Mesh(MeshParams),
    Radial(RadialParams),
}

/// Weight exponents `(a, b)` in `⟨x⟩^{−a} · ⟨x⟩^{−b}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightPair {
    pub a: f64,
    pub b: f64,
}

impl WeightPair {
    /// `a = k + s`, `b = k + s₁`.
    pub fn for_order(k: u32, s: f64, s1: f64) -> Self {
        Self { a: k as f64 + s, b: k as f64 + s1 }
    }

    /// `a = b = k₀ + 2 + s` for the top derivative.
    pub fn top_order(k0: u32, s: f64) -> Self {
        let e = k0 as f64 + 2.0 + s;
        Self { a: e, b: e }
    }
}

pub enum ResolventOperator<'a> {
    Mesh(&'a MeshResolvent),
    Radial(&'a RadialResolvent),
}

/// Points per wavelength below which mesh operators are refused.
const MIN_POINTS_PER_WAVELENGTH: f64 = 3.0;

fn check_mesh_resolution(mesh: &QuadratureMesh, freq: &ComplexFrequency) -> Result<()> {
    let (n_r, n_a) = mesh.radial_counts;
    let radial_gap = mesh.r_trunc / n_r as f64;
    let angular_gap = mesh.r_trunc * (4.0 * std::f64::consts::PI / n_a as f64).sqrt();
    let wavelength = 2.0 * std::f64::consts::PI / freq.w().norm();
    let ppw = wavelength / radial_gap.max(angular_gap);
    if ppw < MIN_POINTS_PER_WAVELENGTH {
        return Err(Error::Accuracy(format!(
            "mesh resolves {ppw:.2} points per wavelength at lambda = {}",
            freq.lambda
        )));
    }
    Ok(())
}

/// `‖⟨x⟩^{−a} ∂^k R ⟨x⟩^{−b}‖_{L²→L²}` (of `R₀` when `free`).
pub fn weighted_resolvent_norm(op: ResolventOperator<'_>, free: bool, weights: WeightPair, k: u32) -> Result<f64> {
    match op {
        ResolventOperator::Mesh(h) => {
            let mesh = h.mesh();
            let freq = crate::lippmann_schwinger::ResolventHandle::frequency(h);
            check_mesh_resolution(mesh, &freq)?;
            let m = if free { free_mesh_matrix(mesh, &freq, k) } else { h.mesh_derivative(k) };
            let fa: Vec<f64> = mesh.nodes.iter().zip(&mesh.weights).map(|(x, w)| w.sqrt() * bracket(norm3(x)).powf(-weights.a)).collect();
            let fb: Vec<f64> = mesh.nodes.iter().zip(&mesh.weights).map(|(x, w)| w.sqrt() * bracket(norm3(x)).powf(-weights.b)).collect();
            let scaled = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * fa[i] * fb[j]);
            Ok(dense_top_singular_value(&scaled))
        }
        ResolventOperator::Radial(r) => Ok(r.weighted_norm(k as usize, weights.a, weights.b, free)?.sup),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BirmanSchwingerEntry {
    pub lambda: f64,
    pub norm_k0: f64,
    pub min_singular: f64,
    pub inverse_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BirmanSchwingerReport {
    pub epsilon: f64,
    pub s1: f64,
    pub entries: Vec<BirmanSchwingerEntry>,
    /// Log–log fit of `‖K₀‖` against `λ`, when the sweep allows one.
    pub fit: Option<DecayFit>,
    pub sup_inverse_norm: f64,
}

fn mesh_birman_entry(mesh: &QuadratureMesh, v: &PotentialSpec, freq: &ComplexFrequency, s1: f64) -> Result<BirmanSchwingerEntry> {
    check_mesh_resolution(mesh, freq)?;
    let n = mesh.len();
    let k = free_mesh_matrix(mesh, freq, 0);
    let sw: Vec<f64> = mesh.weights.iter().map(|w| w.sqrt()).collect();
    // √W ⟨x⟩^{s₁} V K W ⟨x⟩^{−s₁} √W^{−1}
    let left: Vec<f64> = mesh.nodes.iter().zip(&sw).map(|(x, s)| s * bracket(norm3(x)).powf(s1) * v.value(x)).collect();
    let right: Vec<f64> = mesh.nodes.iter().zip(&sw).map(|(x, s)| s * bracket(norm3(x)).powf(-s1)).collect();
    let k0 = DMatrix::from_fn(n, n, |i, j| k[(i, j)] * left[i] * right[j]);
    let norm_k0 = dense_top_singular_value(&k0);
    let one_plus = DMatrix::<Complex64>::identity(n, n) + &k0;
    let sv = one_plus.singular_values();
    let min_singular = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(BirmanSchwingerEntry { lambda: freq.lambda, norm_k0, min_singular, inverse_norm: 1.0 / min_singular })
}

fn radial_birman_entry(p: &RadialParams, v: &PotentialSpec, freq: &ComplexFrequency, s1: f64) -> Result<BirmanSchwingerEntry> {
    let r = RadialResolvent::new(v, freq, p.r_max, p.settings)?;
    let norm_k0 = r.birman_schwinger_norm(s1)?.sup;
    let inverse_norm = r.birman_schwinger_inverse_norm(s1)?.sup;
    Ok(BirmanSchwingerEntry { lambda: freq.lambda, norm_k0, min_singular: 1.0 / inverse_norm, inverse_norm })
}

/// Norms of `K₀ = ⟨x⟩^{s₁} V R₀ ⟨x⟩^{−s₁}` and of `(1 + K₀)^{−1}` over a λ sweep.
pub fn birman_schwinger_check(
    backend: &Backend,
    v: &PotentialSpec,
    lambda_list: &[f64],
    epsilon: f64,
    s1: f64,
) -> Result<BirmanSchwingerReport> {
    if lambda_list.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::domain("lambda_list", "all lambda must be positive"));
    }
    let mesh = match backend {
        Backend::Mesh(p) => Some(build_mesh(p.r_trunc, p.n_r, p.n_angular)?),
        Backend::Radial(_) => None,
    };
    let mut entries = Vec::with_capacity(lambda_list.len());
    for &lambda in lambda_list {
        let freq = ComplexFrequency::new(lambda, epsilon, Sign::Plus)?;
        let e = if v.is_zero() {
            BirmanSchwingerEntry { lambda, norm_k0: 0.0, min_singular: 1.0, inverse_norm: 1.0 }
        } else {
            match backend {
                Backend::Mesh(_) => mesh_birman_entry(mesh.as_ref().expect("built"), v, &freq, s1)?,
                Backend::Radial(p) => radial_birman_entry(p, v, &freq, s1)?,
            }
        };
        entries.push(e);
    }
    let xs: Vec<f64> = entries.iter().map(|e| e.lambda).collect();
    let ys: Vec<f64> = entries.iter().map(|e| e.norm_k0).collect();
    let fit = if ys.iter().all(|&y| y > 0.0) { fit_decay(&xs, &ys, FitModel::PurePower).ok() } else { None };
    let sup_inverse_norm = entries.iter().map(|e| e.inverse_norm).fold(0.0, f64::max);
    Ok(BirmanSchwingerReport { epsilon, s1, entries, fit, sup_inverse_norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lippmann_schwinger::solve_resolvent;

    #[test]
    fn zero_potential_report() {
        let b = Backend::Mesh(MeshParams { r_trunc: 2.0, n_r: 4, n_angular: 6 });
        let r = birman_schwinger_check(&b, &PotentialSpec::zero(), &[1.0, 2.0], 0.1, 1.0).unwrap();
        assert!(r.entries.iter().all(|e| e.norm_k0 == 0.0 && e.min_singular == 1.0));
        assert!(r.fit.is_none());
    }

    #[test]
    fn mesh_and_radial_birman_norms_agree() {
        let v = PotentialSpec::compact_bump(0.8, 2.0).unwrap();
        // the column variable of VR₀ runs over all of R³, so the ball must reach
        // well past the support
        let mesh = Backend::Mesh(MeshParams { r_trunc: 4.0, n_r: 20, n_angular: 72 });
        let radial = Backend::Radial(RadialParams { r_max: 20.0, settings: RadialSettings::default() });
        let a = birman_schwinger_check(&mesh, &v, &[1.0], 0.3, 1.0).unwrap();
        let b = birman_schwinger_check(&radial, &v, &[1.0], 0.3, 1.0).unwrap();
        let (x, y) = (a.entries[0].norm_k0, b.entries[0].norm_k0);
        assert!((x - y).abs() < 0.03 * y, "{x} vs {y}");
        let (x, y) = (a.entries[0].inverse_norm, b.entries[0].inverse_norm);
        assert!((x - y).abs() < 0.03 * y, "{x} vs {y}");
    }

    #[test]
    fn coarse_mesh_refused_at_high_frequency() {
        let mesh = build_mesh(4.0, 6, 14).unwrap();
        let f = ComplexFrequency::new(16.0, 0.1, Sign::Plus).unwrap();
        let h = solve_resolvent(&mesh, &PotentialSpec::zero(), &f).unwrap();
        let r = weighted_resolvent_norm(ResolventOperator::Mesh(&h), true, WeightPair::for_order(0, 1.0, 1.0), 0);
        assert!(matches!(r, Err(Error::Accuracy(_))));
    }

    #[test]
    fn mesh_and_radial_weighted_norms_agree_for_a_bump() {
        let v = PotentialSpec::compact_bump(1.0, 2.0).unwrap();
        let f = ComplexFrequency::new(1.0, 0.5, Sign::Plus).unwrap();
        let mesh = build_mesh(2.0, 14, 50).unwrap();
        let hm = solve_resolvent(&mesh, &v, &f).unwrap();
        // restricted to the ball, the mesh route sees less than the full-space norm
        let wp = WeightPair { a: 3.0, b: 3.0 };
        let a = weighted_resolvent_norm(ResolventOperator::Mesh(&hm), false, wp, 0).unwrap();
        let hr = RadialResolvent::new(&v, &f, 40.0, RadialSettings::default()).unwrap();
        let b = weighted_resolvent_norm(ResolventOperator::Radial(&hr), false, wp, 0).unwrap();
        assert!(a <= b * 1.05 && a > 0.5 * b, "{a} vs {b}");
    }
}
