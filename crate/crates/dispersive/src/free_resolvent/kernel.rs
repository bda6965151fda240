use std::f64::consts::PI;

use num_complex::Complex64;

use super::types::ComplexFrequency;
use crate::error::{Error, Result};
use crate::{dist3, Point};

/// Kernel of the `k`-th λ-derivative of the free resolvent at `freq`.
pub fn free_kernel(x: &Point, y: &Point, freq: &ComplexFrequency, k: i32) -> Result<Complex64> {
    if k < 0 {
        return Err(Error::domain("k", format!("derivative order must be >= 0, got {k}")));
    }
    let r = dist3(x, y);
    if k == 0 && r == 0.0 {
        return Err(Error::Singularity);
    }
    Ok(free_kernel_radial(r, freq, k as u32))
}

/// Same as [`free_kernel`] as a function of `r = |x − y|`; `r = 0` with `k = 0`
/// returns infinity.
pub fn free_kernel_radial(r: f64, freq: &ComplexFrequency, k: u32) -> Complex64 {
    let kappa = freq.kappa();
    let e = (kappa * r).exp();
    if k == 0 {
        return e / (4.0 * PI * r);
    }
    let unit = Complex64::new(0.0, freq.sign.factor());
    unit.powu(k) * r.powi(k as i32 - 1) * e / (4.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::free_resolvent::types::Sign;

    #[test]
    fn unit_distance_value() {
        let f = ComplexFrequency::new(2.0, 0.0, Sign::Plus).unwrap();
        let v = free_kernel(&[0.0; 3], &[1.0, 0.0, 0.0], &f, 0).unwrap();
        // e^{2i}/(4π)
        assert!((v.re - (-0.033_115_913_044_266_358)).abs() < 1e-12);
        assert!((v.im - 0.072_359_590_110_024_117).abs() < 1e-12);
    }

    #[test]
    fn diagonal_first_derivative() {
        let f = ComplexFrequency::new(3.3, 0.7, Sign::Plus).unwrap();
        let p = [0.3, -1.0, 2.0];
        let v = free_kernel(&p, &p, &f, 1).unwrap();
        assert!(v.re.abs() < 1e-16);
        assert!((v.im - 1.0 / (4.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn second_derivative_example() {
        let f = ComplexFrequency::new(1.0, 0.5, Sign::Minus).unwrap();
        let v = free_kernel(&[0.0; 3], &[0.0, 0.0, 2.0], &f, 2).unwrap();
        // oracle: (−i)²·2·e^{(−i−0.5)·2}/(4π) = −(2/4π) e^{−1} (cos 2 − i sin 2)
        let mag = 2.0 / (4.0 * PI) * (-1.0f64).exp();
        let expected = Complex64::new(-mag * 2f64.cos(), mag * 2f64.sin());
        assert!((v - expected).norm() < 1e-15);
        assert!((v.re - 0.024_365_327_169_213_570).abs() < 1e-12);
        assert!((v.im - 0.053_239_211_146_140_593).abs() < 1e-12);
    }

    #[test]
    fn singular_and_negative_orders() {
        let f = ComplexFrequency::new(1.0, 0.1, Sign::Plus).unwrap();
        assert_eq!(free_kernel(&[1.0; 3], &[1.0; 3], &f, 0), Err(Error::Singularity));
        assert!(matches!(free_kernel(&[0.0; 3], &[1.0; 3], &f, -1), Err(Error::Domain { .. })));
    }
}
