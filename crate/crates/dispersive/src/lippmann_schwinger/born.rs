//! First Born term of the scattered kernel at coincident points, where the
//! product of two free kernels is too singular for node quadrature.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::potential::PotentialSpec;
use crate::free_resolvent::ComplexFrequency;
use crate::quadrature::{composite, gauss_legendre};
use crate::{norm3, Point};

/// `∂^k (−R₀ V_R R₀)(x, x)` with `V_R = V·1_{|z|<R}`, integrated in polar
/// coordinates about `x` so the `|x − z|^{−2}` factor cancels.
pub fn born_diagonal(potential: &PotentialSpec, freq: &ComplexFrequency, x: &Point, k: u32, r_trunc: f64) -> Complex64 {
    born_diagonal_with(potential, freq, x, k, r_trunc, potential.radial)
}

fn born_diagonal_with(potential: &PotentialSpec, freq: &ComplexFrequency, x: &Point, k: u32, r_trunc: f64, shells: bool) -> Complex64 {
    let r = norm3(x);
    let kappa = freq.kappa();
    let two_i = Complex64::new(0.0, 2.0 * freq.sign.factor());
    let width = (0.5 / freq.w().norm()).min(0.25);
    let rule = composite(0.0, r + r_trunc, width, 8);
    let inside = |s: f64| if s < r_trunc { potential.radial_value(s) } else { 0.0 };
    let shell = |rho: f64| -> f64 {
        if shells {
            if r < 1e-12 {
                return 4.0 * PI * inside(rho);
            }
            // ∫_{S²} V(|x + ρω|) dω = (2π/rρ) ∫_{|r−ρ|}^{r+ρ} V(s) s ds
            let (a, b) = ((r - rho).abs(), (r + rho).min(r_trunc));
            if b <= a {
                return 0.0;
            }
            let inner = composite(a, b, 0.1, 8);
            2.0 * PI / (r * rho) * inner.integrate(|s| inside(s) * s)
        } else {
            let mu = gauss_legendre(48, -1.0, 1.0);
            let n_phi = 48;
            let mut acc = 0.0;
            for (&c, &wc) in mu.nodes.iter().zip(&mu.weights) {
                let st = (1.0 - c * c).max(0.0).sqrt();
                for p in 0..n_phi {
                    let t = 2.0 * PI * p as f64 / n_phi as f64;
                    let z = [x[0] + rho * st * t.cos(), x[1] + rho * st * t.sin(), x[2] + rho * c];
                    if norm3(&z) < r_trunc {
                        acc += wc * potential.value(&z) * 2.0 * PI / n_phi as f64;
                    }
                }
            }
            acc
        }
    };
    let mut acc = Complex64::new(0.0, 0.0);
    for (&rho, &wt) in rule.nodes.iter().zip(&rule.weights) {
        acc += (kappa * 2.0 * rho).exp() * (two_i * rho).powu(k) * (wt * shell(rho));
    }
    -acc / (16.0 * PI * PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::free_resolvent::Sign;

    #[test]
    fn matches_cartesian_oracle_for_a_bump() {
        // midpoint rule in (ρ, μ) about x, frozen from an independent run
        let v = PotentialSpec::compact_bump(1.0, 2.0).unwrap();
        let f = ComplexFrequency::new(1.0, 0.2, Sign::Plus).unwrap();
        let b = born_diagonal(&v, &f, &[0.3, 0.1, 0.2], 0, 10.0);
        let oracle = Complex64::new(-0.019_137_325_080_744_737, -0.026_630_988_803_295_754);
        assert!((b - oracle).norm() < 1e-6 * oracle.norm(), "{b}");
    }

    #[test]
    fn minus_branch_is_the_conjugate() {
        let v = PotentialSpec::compact_bump(1.0, 2.0).unwrap();
        let x = [0.5, -0.2, 0.4];
        for k in 0..3 {
            let p = born_diagonal(&v, &ComplexFrequency::new(2.0, 0.3, Sign::Plus).unwrap(), &x, k, 3.0);
            let m = born_diagonal(&v, &ComplexFrequency::new(2.0, 0.3, Sign::Minus).unwrap(), &x, k, 3.0);
            assert!((p - m.conj()).norm() < 1e-14 * p.norm());
        }
    }

    #[test]
    fn angular_route_agrees_with_shell_formula() {
        let v = PotentialSpec::gaussian(1.0, 1.0).unwrap();
        let f = ComplexFrequency::new(1.5, 0.3, Sign::Plus).unwrap();
        for k in 0..2 {
            let x = [0.5, -0.2, 0.4];
            let a = born_diagonal_with(&v, &f, &x, k, 5.0, true);
            let b = born_diagonal_with(&v, &f, &x, k, 5.0, false);
            assert!((a - b).norm() < 1e-4 * a.norm(), "k={k}: {a} vs {b}");
        }
    }
}
