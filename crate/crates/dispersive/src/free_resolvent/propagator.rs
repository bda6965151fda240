use std::f64::consts::PI;

use num_complex::Complex64;

use super::types::{CutoffKind, CutoffSpec};
use crate::error::{Error, Result};
use crate::norm_estimation::{fit_decay, DecayFit, FitModel};
use crate::quadrature::{composite_breaks, gauss_legendre, graded_breaks, Rule1d};
use crate::{dist3, Point};

/// Resolution of the ρ-quadrature used by [`free_propagator_kernel_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatoryQuadrature {
    /// Panel width; `None` selects `π/(4(|t| + r))`.
    pub panel_width: Option<f64>,
    /// Gauss–Legendre points per panel.
    pub order: usize,
}

impl Default for OscillatoryQuadrature {
    fn default() -> Self {
        Self { panel_width: None, order: 8 }
    }
}

impl OscillatoryQuadrature {
    pub fn refined(&self, t: f64, r: f64) -> Self {
        Self { panel_width: Some(0.5 * self.width(t, r)), order: self.order }
    }

    fn width(&self, t: f64, r: f64) -> f64 {
        self.panel_width.unwrap_or(PI / (4.0 * (t.abs() + r).max(1.0)))
    }
}

/// Kernel of `G₀^{−α} e^{it√G₀} cutoff(√G₀)` at `(x, y)`.
pub fn free_propagator_kernel(x: &Point, y: &Point, t: f64, alpha: f64, cutoff: &CutoffSpec) -> Result<Complex64> {
    free_propagator_kernel_with(x, y, t, alpha, cutoff, &OscillatoryQuadrature::default())
}

pub fn free_propagator_kernel_with(
    x: &Point,
    y: &Point,
    t: f64,
    alpha: f64,
    cutoff: &CutoffSpec,
    quad: &OscillatoryQuadrature,
) -> Result<Complex64> {
    propagator_radial(dist3(x, y), t, alpha, cutoff, quad)
}

/// Radial form: `(2π² r)⁻¹ ∫₀^∞ sin(ρr) e^{itρ} ρ^{1−2α} cutoff(ρ) dρ`.
pub fn propagator_radial(r: f64, t: f64, alpha: f64, cutoff: &CutoffSpec, quad: &OscillatoryQuadrature) -> Result<Complex64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::domain("alpha", format!("must lie in [0, 1], got {alpha}")));
    }
    let limit = PI / (4.0 * t.abs().max(r).max(1e-300));
    let width = quad.width(t, r);
    if width > limit * (1.0 + 1e-12) {
        return Err(Error::Accuracy(format!(
            "panel width {width} exceeds {limit} for t = {t}, r = {r}"
        )));
    }
    let beta = 1.0 - 2.0 * alpha;
    let (lo, _) = cutoff.support();
    let plateau = cutoff.plateau_start();
    let finite_hi = match cutoff.kind {
        CutoffKind::ChiA | CutoffKind::EtaA => plateau.expect("plateau"),
        _ => cutoff.support().1,
    };
    let mut breaks = vec![lo];
    for b in cutoff.breakpoints() {
        if b > lo && b <= finite_hi {
            breaks.push(b);
        }
    }
    let mut fine = Vec::new();
    for pair in breaks.windows(2) {
        let g = graded_breaks(pair[0], pair[1], width, 1.0, width);
        fine.extend_from_slice(&g[..g.len() - 1]);
    }
    fine.push(finite_hi);
    let rule = composite_breaks(&fine, quad.order);
    let mut sum = Complex64::new(0.0, 0.0);
    for (&rho, &w) in rule.nodes.iter().zip(&rule.weights) {
        let c = cutoff.eval(rho);
        if c == 0.0 {
            continue;
        }
        let phase = Complex64::from_polar(1.0, t * rho);
        sum += w * c * sinc_term(rho, r) * rho.powf(beta) * phase;
    }
    if let Some(b) = plateau {
        sum += plateau_tail(b, r, t, beta)?;
    }
    Ok(sum / (2.0 * PI * PI))
}

/// `sin(ρr)/r`, continued to `ρ` at `r = 0`.
fn sinc_term(rho: f64, r: f64) -> f64 {
    if r * rho < 1e-6 {
        rho * (1.0 - (rho * r).powi(2) / 6.0)
    } else {
        (rho * r).sin() / r
    }
}

fn sinc_term_c(rho: Complex64, r: f64) -> Complex64 {
    if (rho * r).norm() < 1e-6 {
        rho * (1.0 - (rho * r).powi(2) / 6.0)
    } else {
        (rho * r).sin() / r
    }
}

/// `∫_B^∞ sin(ρr)/r · e^{itρ} ρ^β dρ` as an Abel limit, along rays `B + iσu`
/// on which the integrand decays exponentially.
fn plateau_tail(b: f64, r: f64, t: f64, beta: f64) -> Result<Complex64> {
    if t == 0.0 {
        return Err(Error::domain("t", "must be nonzero for a cutoff without compact support"));
    }
    if r < 0.5 * t.abs() {
        let sigma = t.signum();
        let rate = t.abs() - r;
        let f = |u: f64| {
            let rho = Complex64::new(b, sigma * u);
            sinc_term_c(rho, r) * (Complex64::i() * t * rho).exp() * rho.powf(beta)
        };
        return Ok(Complex64::new(0.0, sigma) * ray_integral(f, rate, b));
    }
    let mut total = Complex64::new(0.0, 0.0);
    for (omega, coef) in [(t + r, 1.0), (t - r, -1.0)] {
        if omega.abs() < 1e-12 * (t.abs() + r) {
            return Err(Error::Divergence(format!("evaluation on the wavefront r = |t| = {r}")));
        }
        let sigma = omega.signum();
        let f = |u: f64| {
            let rho = Complex64::new(b, sigma * u);
            (Complex64::i() * omega * rho).exp() * rho.powf(beta)
        };
        total += coef * Complex64::new(0.0, sigma) * ray_integral(f, omega.abs(), b);
    }
    Ok(total / (Complex64::new(0.0, 2.0) * r))
}

/// `∫₀^∞ f(u) du` for integrands decaying like `e^{−rate·u}` and varying on
/// the scale `b` near the origin.
fn ray_integral<F: Fn(f64) -> Complex64>(f: F, rate: f64, b: f64) -> Complex64 {
    let h0 = (0.25 / rate).min(0.25 * b);
    let hi = 45.0 / rate;
    let breaks = graded_breaks(0.0, hi, h0, 1.35, 1.0 / rate);
    let rule: Rule1d = composite_breaks(&breaks, 12);
    rule.nodes.iter().zip(&rule.weights).map(|(&u, &w)| w * f(u)).sum()
}

/// Sample radii `r = |x − y|` realized by pairs on a line through the origin
/// with `|x|, |y| ≤ radius`.
pub fn region_distances(radius: f64, per_side: usize) -> Vec<f64> {
    let n = per_side.max(1);
    (0..=2 * n).map(|k| radius * k as f64 / n as f64).collect()
}

/// Log–log fit of `sup_{|x|,|y| ≤ c·t} |K(x, y; t)|` over `t_list`.
pub fn appendix_decay_fit(t_list: &[f64], alpha: f64, cutoff: &CutoffSpec, region_factor: f64) -> Result<DecayFit> {
    if t_list.len() < 4 {
        return Err(Error::Fit(format!("need at least 4 time samples, got {}", t_list.len())));
    }
    if t_list.windows(2).any(|w| w[1] <= w[0]) || t_list[0] < 1.0 {
        return Err(Error::domain("t_list", "must be increasing with entries >= 1"));
    }
    let sups = appendix_sups(t_list, alpha, cutoff, region_factor)?;
    fit_decay(t_list, &sups, FitModel::PurePower)
}

/// The suprema fitted by [`appendix_decay_fit`].
pub fn appendix_sups(t_list: &[f64], alpha: f64, cutoff: &CutoffSpec, region_factor: f64) -> Result<Vec<f64>> {
    let quad = OscillatoryQuadrature::default();
    t_list
        .iter()
        .map(|&t| {
            let mut best: f64 = 0.0;
            for r in region_distances(region_factor * t, 16) {
                let v = propagator_radial(r, t, alpha, cutoff, &quad)?.norm();
                best = best.max(v);
            }
            Ok(best)
        })
        .collect()
}

/// Independent three-dimensional evaluation: spherical shells in ξ with a
/// Gauss–Legendre rule in the polar angle about `x − y`, for compactly
/// supported cutoffs.
pub fn propagator_fourier_3d(r: f64, t: f64, alpha: f64, cutoff: &CutoffSpec, n_rho: usize, n_mu: usize) -> Result<Complex64> {
    if cutoff.support().1.is_infinite() {
        return Err(Error::domain("cutoff", "the direct Fourier route needs compact support"));
    }
    let (lo, hi) = cutoff.support();
    let rho_rule = composite_breaks(&graded_breaks(lo, hi, (hi - lo) / n_rho as f64, 1.0, hi), 8);
    let mu_rule = gauss_legendre(n_mu, -1.0, 1.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for (&rho, &w) in rho_rule.nodes.iter().zip(&rho_rule.weights) {
        let amp = rho * rho * rho.powf(-2.0 * alpha) * cutoff.eval(rho);
        if amp == 0.0 {
            continue;
        }
        let mut ang = Complex64::new(0.0, 0.0);
        for (&mu, &wm) in mu_rule.nodes.iter().zip(&mu_rule.weights) {
            ang += wm * Complex64::from_polar(1.0, rho * r * mu);
        }
        sum += w * amp * Complex64::from_polar(1.0, t * rho) * ang * 2.0 * PI;
    }
    Ok(sum / (8.0 * PI * PI * PI))
}
