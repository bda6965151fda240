use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::{composite, composite_breaks, graded_breaks, Rule1d};
use crate::{bracket, norm3, Point};

/// `A_s(x, ε) = ∫ e^{−2ε|x−y|} ⟨y⟩^{−2s−2} dy`.
pub fn bound_integral_a(s: f64, epsilon: f64, x: &Point) -> Result<f64> {
    check(s, epsilon)?;
    Ok(radial_convolution(norm3(x), epsilon, 2.0 * s + 2.0, 0))
}

/// `B_{s,σ,k}(x, ε) = ⟨x⟩^{−2σ−2k+2} ∫ |x−y|^{2k} e^{−2ε|x−y|} ⟨y⟩^{−2s−2k−2} dy`.
pub fn bound_integral_b(s: f64, sigma: f64, k: u32, epsilon: f64, x: &Point) -> Result<f64> {
    check(s, epsilon)?;
    let r = norm3(x);
    let pref = bracket(r).powf(-2.0 * sigma - 2.0 * k as f64 + 2.0);
    Ok(pref * radial_convolution(r, epsilon, 2.0 * s + 2.0 * k as f64 + 2.0, 2 * k))
}

fn check(s: f64, epsilon: f64) -> Result<()> {
    if !(s > -0.5) {
        return Err(Error::domain("s", format!("must exceed -1/2, got {s}")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Divergence(format!("epsilon must be positive, got {epsilon}")));
    }
    Ok(())
}

/// `∫_{R³} |x−y|^m e^{−2ε|x−y|} ⟨y⟩^{−q} dy` for `|x| = xn`, in polar
/// coordinates centred at `x`.
fn radial_convolution(xn: f64, eps: f64, q: f64, m: u32) -> f64 {
    let rule = radial_rule(xn, eps);
    rule.integrate(|rho| {
        rho.powi(2 + m as i32) * (-2.0 * eps * rho).exp() * angular_average(xn, rho, q)
    })
}

fn radial_rule(xn: f64, eps: f64) -> Rule1d {
    let far = xn + 20.0 + 60.0 / eps;
    let mut breaks = Vec::new();
    let (lo, hi) = ((xn - 20.0).max(0.0), xn + 20.0);
    if lo > 0.0 {
        breaks.extend(two_sided_breaks(0.0, lo, 0.5, 1.25));
        breaks.pop();
    }
    breaks.extend(graded_breaks(lo, hi, 0.5, 1.0, 0.5));
    breaks.pop();
    breaks.extend(graded_breaks(hi, far, 0.5, 1.25, 0.5 / eps));
    composite_breaks(&breaks, 16)
}

/// Breakpoints on `[lo, hi]` fine at both ends and growing geometrically inwards.
fn two_sided_breaks(lo: f64, hi: f64, h: f64, ratio: f64) -> Vec<f64> {
    let mut left = vec![lo];
    let mut right = vec![hi];
    let mut w = h;
    while left.last().unwrap() + w < right.last().unwrap() - w {
        let l = left.last().unwrap() + w;
        let r = right.last().unwrap() - w;
        left.push(l);
        right.push(r);
        w *= ratio;
    }
    right.reverse();
    left.extend(right);
    left
}

/// `∫_{S²} ⟨x + ρω⟩^{−q} dω` in closed form.
pub(crate) fn angular_average(xn: f64, rho: f64, q: f64) -> f64 {
    let c = 1.0 + xn * xn + rho * rho;
    let b = 2.0 * xn * rho;
    let m = 0.5 * q;
    let beta = b / c;
    if beta < 1e-3 {
        let m1 = m * (m + 1.0);
        let series = 2.0 + m1 / 3.0 * beta * beta + m1 * (m + 2.0) * (m + 3.0) / 60.0 * beta.powi(4);
        return 2.0 * PI * c.powf(-m) * series;
    }
    if (1.0 - m).abs() < 1e-12 {
        return 2.0 * PI / b * ((c + b) / (c - b)).ln();
    }
    2.0 * PI * ((c + b).powf(1.0 - m) - (c - b).powf(1.0 - m)) / (b * (1.0 - m))
}

/// Radii used to approximate suprema over `x ∈ R³` of the radial integrals.
pub fn sup_radii(epsilon: f64) -> Vec<f64> {
    let mut out = vec![0.0];
    let hi = 8.0 / epsilon;
    let mut r: f64 = 0.05;
    while r < hi {
        out.push(r);
        r *= 1.12;
    }
    out.push(hi);
    out
}

fn golden_refine<F: Fn(f64) -> f64>(f: F, radii: &[f64]) -> f64 {
    let vals: Vec<f64> = radii.iter().map(|&r| f(r)).collect();
    let (imax, &vmax) = vals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty");
    let lo = radii[imax.saturating_sub(1)];
    let hi = radii[(imax + 1).min(radii.len() - 1)];
    if hi <= lo {
        return vmax;
    }
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..40 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    vmax.max(fc).max(fd)
}

/// `sup_x A_s(x, ε)` over a logarithmic radius scan refined by golden search.
pub fn sup_bound_integral_a(s: f64, epsilon: f64) -> Result<f64> {
    check(s, epsilon)?;
    let q = 2.0 * s + 2.0;
    Ok(golden_refine(|r| radial_convolution(r, epsilon, q, 0), &sup_radii(epsilon)))
}

/// `sup_x B_{s,σ,k}(x, ε)`.
pub fn sup_bound_integral_b(s: f64, sigma: f64, k: u32, epsilon: f64) -> Result<f64> {
    check(s, epsilon)?;
    let q = 2.0 * s + 2.0 * k as f64 + 2.0;
    let f = |r: f64| bracket(r).powf(-2.0 * sigma - 2.0 * k as f64 + 2.0) * radial_convolution(r, epsilon, q, 2 * k);
    Ok(golden_refine(f, &sup_radii(epsilon)))
}

/// Reference quadrature used by the consistency checks: plain panels in ρ and
/// Gauss–Legendre in the polar angle, no closed forms.
pub fn bound_integral_a_direct(s: f64, epsilon: f64, x: &Point, n_mu: usize) -> Result<f64> {
    check(s, epsilon)?;
    let xn = norm3(x);
    let rho_rule = composite(0.0, xn + 40.0 / epsilon + 20.0, 0.25, 8);
    let mu_rule = composite(-1.0, 1.0, 2.0 / n_mu as f64, 8);
    let q = 2.0 * s + 2.0;
    Ok(rho_rule.integrate(|rho| {
        let ang = mu_rule.integrate(|mu| {
            let y2 = xn * xn + rho * rho + 2.0 * xn * rho * mu;
            (1.0 + y2).powf(-0.5 * q)
        });
        2.0 * PI * rho * rho * (-2.0 * epsilon * rho).exp() * ang
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn semi_infinite_oracle<F: Fn(f64) -> f64>(f: F) -> f64 {
        // ρ = u/(1−u) maps [0, 1) onto [0, ∞)
        let g = |u: f64| {
            if u >= 1.0 {
                return 0.0;
            }
            let rho = u / (1.0 - u);
            f(rho) / ((1.0 - u) * (1.0 - u))
        };
        quadrature::double_exponential::integrate(g, 0.0, 1.0, 1e-12).integral
    }

    #[test]
    fn a_at_origin_matches_oracle() {
        let v = bound_integral_a(0.0, 1.0, &[0.0; 3]).unwrap();
        let oracle = semi_infinite_oracle(|r| 4.0 * PI * r * r * (-2.0 * r).exp() / (1.0 + r * r));
        assert!((v - oracle).abs() / oracle < 1e-8, "{v} vs {oracle}");
    }

    #[test]
    fn b_at_origin_matches_oracle() {
        let (s, eps) = (0.25, 0.125);
        let v = bound_integral_b(s, 0.5, 1, eps, &[0.0; 3]).unwrap();
        let oracle = semi_infinite_oracle(|r| {
            4.0 * PI * r.powi(4) * (-2.0 * eps * r).exp() * (1.0 + r * r).powf(-s - 2.0)
        });
        assert!((v - oracle).abs() / oracle < 1e-6, "{v} vs {oracle}");
    }

    #[test]
    fn off_origin_agrees_with_direct_angular_quadrature() {
        for &(s, eps, r) in &[(0.0, 0.5, 3.0), (-0.25, 0.25, 7.5), (0.5, 0.1, 1.2)] {
            let x = [0.0, r, 0.0];
            let v = bound_integral_a(s, eps, &x).unwrap();
            let d = bound_integral_a_direct(s, eps, &x, 64).unwrap();
            assert!((v - d).abs() / d < 1e-4, "s={s} eps={eps}: {v} vs {d}");
        }
    }

    #[test]
    fn b_reduces_to_a() {
        let x = [1.0, 2.0, -0.5];
        let a = bound_integral_a(0.3, 0.2, &x).unwrap();
        let b = bound_integral_b(0.3, 0.0, 0, 0.2, &x).unwrap();
        let r2 = 1.0 + norm3(&x).powi(2);
        assert!((b - r2 * a).abs() / b < 1e-12);
    }

    #[test]
    fn angular_average_branches_agree() {
        for &q in &[1.5, 2.0, 2.5, 4.0] {
            for &(x, r) in &[(0.0, 1.0), (1e-5, 1.0), (2.0, 2.0), (50.0, 49.0)] {
                let closed = angular_average(x, r, q);
                let mu = composite_breaks(&graded_breaks(-1.0, 1.0, 1e-7, 1.3, 0.01), 8);
                let direct = 2.0 * PI * mu.integrate(|m| (1.0 + x * x + r * r + 2.0 * x * r * m).powf(-0.5 * q));
                assert!((closed - direct).abs() / direct < 1e-9, "q={q} x={x} r={r}");
            }
        }
    }

    #[test]
    fn large_s_stays_bounded() {
        // e^{−2ε|x−y|} ≤ 1, so A_2 never exceeds ∫⟨y⟩^{−6} dy = π²/4
        let limit = PI * PI / 4.0;
        let a2 = sup_bound_integral_a(2.0, 1.0 / 256.0).unwrap();
        assert!(a2 <= limit * (1.0 + 1e-6) && a2 > 0.95 * limit, "{a2} vs {limit}");
    }

    #[test]
    fn errors() {
        assert!(matches!(bound_integral_a(0.0, 0.0, &[0.0; 3]), Err(Error::Divergence(_))));
        assert!(matches!(bound_integral_a(-0.6, 1.0, &[0.0; 3]), Err(Error::Domain { .. })));
    }
}
