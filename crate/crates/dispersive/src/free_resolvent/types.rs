use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Branch of the boundary value `λ ± iε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// Spectral point `λ ± iε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexFrequency {
    pub lambda: f64,
    pub epsilon: f64,
    pub sign: Sign,
}

impl ComplexFrequency {
    pub fn new(lambda: f64, epsilon: f64, sign: Sign) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::domain("lambda", format!("must be finite and >= 0, got {lambda}")));
        }
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::domain("epsilon", format!("must lie in [0, 1], got {epsilon}")));
        }
        Ok(Self { lambda, epsilon, sign })
    }

    /// `w = λ ± iε`, the square root of the spectral parameter.
    pub fn w(&self) -> Complex64 {
        Complex64::new(self.lambda, self.sign.factor() * self.epsilon)
    }

    /// Exponent rate `κ = ±iλ − ε` of the free kernel `e^{κr}/(4πr)`.
    pub fn kappa(&self) -> Complex64 {
        Complex64::new(-self.epsilon, self.sign.factor() * self.lambda)
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..*self }
    }

    pub fn with_sign(&self, sign: Sign) -> Self {
        Self { sign, ..*self }
    }

    pub fn conjugate(&self) -> Self {
        self.with_sign(self.sign.flip())
    }
}

/// Weight exponents σ, s, s₁ together with the split σ = j₀ + σ′.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightParams {
    pub sigma: f64,
    pub s: f64,
    pub s1: f64,
    pub j0: u32,
    pub sigma_prime: f64,
}

impl WeightParams {
    pub fn new(sigma: f64, s: f64, s1: f64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::domain("sigma", format!("must be finite and >= 0, got {sigma}")));
        }
        if !(s > -0.5) {
            return Err(Error::domain("s", format!("must exceed -1/2, got {s}")));
        }
        if !(s1 > 0.5) {
            return Err(Error::domain("s1", format!("must exceed 1/2, got {s1}")));
        }
        let (j0, sigma_prime) = integer_split(sigma);
        Ok(Self { sigma, s, s1, j0, sigma_prime })
    }
}

/// Largest integer strictly below `x` (clamped at zero) and the remainder.
pub fn integer_split(x: f64) -> (u32, f64) {
    if x <= 0.0 {
        return (0, x.max(0.0));
    }
    let j = (x.ceil() - 1.0).max(0.0);
    (j as u32, x - j)
}

/// Lebesgue exponent `p ∈ [2, ∞]` with its dual and `α = 1 − 2/p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LebesgueExponent {
    pub p: f64,
    pub p_prime: f64,
    pub alpha: f64,
}

impl LebesgueExponent {
    pub fn new(p: f64) -> Result<Self> {
        if !(p >= 2.0) {
            return Err(Error::domain("p", format!("must lie in [2, inf], got {p}")));
        }
        let (p_prime, alpha) = if p.is_infinite() {
            (1.0, 1.0)
        } else {
            (p / (p - 1.0), 1.0 - 2.0 / p)
        };
        Ok(Self { p, p_prime, alpha })
    }

    pub fn from_alpha(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::domain("alpha", format!("must lie in [0, 1], got {alpha}")));
        }
        if alpha == 1.0 {
            return Self::new(f64::INFINITY);
        }
        Self::new(2.0 / (1.0 - alpha))
    }

    pub fn infinity() -> Self {
        Self { p: f64::INFINITY, p_prime: 1.0, alpha: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffKind {
    /// Vanishes below `a`, equals one above `a + width`.
    ChiA,
    /// `χ_a (1 − η_A)`, supported in `[a, A]`.
    PsiAA,
    /// `φ(ρ/A)` with `φ` a bump supported in `[1/2, 2]`.
    PhiWindow,
    /// High-frequency remainder `η_A = χ_a − ψ_{a,A}`, rising on `[A/2, A]`.
    EtaA,
}

/// Spectral cutoff built from polynomial smoothsteps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub a: f64,
    #[serde(rename = "A")]
    pub big_a: f64,
    pub kind: CutoffKind,
    #[serde(default = "default_width")]
    pub smoothness_width: f64,
    /// Odd polynomial degree `2m + 1` of the smoothstep; the cutoff is `C^m`.
    #[serde(default = "default_order")]
    pub order: u32,
}

fn default_width() -> f64 {
    0.5
}

fn default_order() -> u32 {
    5
}

impl CutoffSpec {
    pub fn new(kind: CutoffKind, a: f64, big_a: f64) -> Result<Self> {
        Self { a, big_a, kind, smoothness_width: default_width(), order: default_order() }.validated()
    }

    pub fn chi(a: f64) -> Result<Self> {
        Self::new(CutoffKind::ChiA, a, f64::INFINITY)
    }

    pub fn with_order(mut self, order: u32) -> Result<Self> {
        self.order = order;
        self.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.a > 0.0) || !self.a.is_finite() {
            return Err(Error::domain("cutoff.a", format!("must be positive, got {}", self.a)));
        }
        if !(self.smoothness_width > 0.0) {
            return Err(Error::domain("cutoff.smoothness_width", "must be positive"));
        }
        if self.order < 3 || self.order % 2 == 0 {
            return Err(Error::domain("cutoff.order", format!("must be odd and >= 3, got {}", self.order)));
        }
        match self.kind {
            CutoffKind::ChiA => {}
            CutoffKind::PsiAA | CutoffKind::EtaA => {
                if !(self.big_a.is_finite() && self.big_a >= 2.0 * (self.a + self.smoothness_width)) {
                    return Err(Error::domain(
                        "cutoff.A",
                        format!("must be finite and at least 2(a + width), got {}", self.big_a),
                    ));
                }
            }
            CutoffKind::PhiWindow => {
                if !(self.big_a.is_finite() && self.big_a > 0.0) {
                    return Err(Error::domain("cutoff.A", "must be finite and positive"));
                }
            }
        }
        Ok(self)
    }

    fn smooth_index(&self) -> u32 {
        (self.order - 1) / 2
    }

    pub fn eval(&self, rho: f64) -> f64 {
        let m = self.smooth_index();
        let w = self.smoothness_width;
        let chi = smoothstep(m, (rho - self.a) / w);
        match self.kind {
            CutoffKind::ChiA => chi,
            CutoffKind::EtaA => self.eta(rho),
            CutoffKind::PsiAA => chi * (1.0 - self.eta(rho)),
            CutoffKind::PhiWindow => window_bump(m, rho / self.big_a),
        }
    }

    /// `η_A(ρ) = S(2ρ/A − 1)`, the closed form of `A⁻¹∫₀^ρ φ₀(τ/A)dτ`.
    pub fn eta(&self, rho: f64) -> f64 {
        smoothstep(self.smooth_index(), 2.0 * rho / self.big_a - 1.0)
    }

    /// Unit-mass window `φ₀` on `[1/2, 1]` generating `η_A`.
    pub fn unit_window(&self, u: f64) -> f64 {
        2.0 * smoothstep_derivative(self.smooth_index(), 2.0 * u - 1.0)
    }

    /// Points where the cutoff changes its polynomial piece.
    pub fn breakpoints(&self) -> Vec<f64> {
        let a = self.a;
        let w = self.smoothness_width;
        let big = self.big_a;
        match self.kind {
            CutoffKind::ChiA => vec![a, a + w],
            CutoffKind::PsiAA => vec![a, a + w, 0.5 * big, big],
            CutoffKind::EtaA => vec![0.5 * big, big],
            CutoffKind::PhiWindow => vec![0.5 * big, big, 2.0 * big],
        }
    }

    /// Support `[lo, hi]`; `hi` is infinite for the non-compact kinds.
    pub fn support(&self) -> (f64, f64) {
        match self.kind {
            CutoffKind::ChiA => (self.a, f64::INFINITY),
            CutoffKind::PsiAA => (self.a, self.big_a),
            CutoffKind::EtaA => (0.5 * self.big_a, f64::INFINITY),
            CutoffKind::PhiWindow => (0.5 * self.big_a, 2.0 * self.big_a),
        }
    }

    /// Point beyond which the cutoff is identically one, if any.
    pub fn plateau_start(&self) -> Option<f64> {
        match self.kind {
            CutoffKind::ChiA => Some(self.a + self.smoothness_width),
            CutoffKind::EtaA => Some(self.big_a),
            _ => None,
        }
    }
}

/// Polynomial smoothstep `S_m` of degree `2m + 1`: zero below 0, one above 1,
/// with `m` continuous derivatives.
pub fn smoothstep(m: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let m = m as u64;
    let mut sum = 0.0;
    for n in 0..=m {
        let c = binomial(m + n, n) * binomial(2 * m + 1, m - n);
        sum += c * (-x).powi(n as i32);
    }
    x.powi(m as i32 + 1) * sum
}

/// `S_m'(x) = (2m+1)!/(m!)² · xᵐ(1−x)ᵐ` on `[0, 1]`.
pub fn smoothstep_derivative(m: u32, x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    let c = (2 * m as u64 + 1) as f64 * binomial(2 * m as u64, m as u64);
    c * (x * (1.0 - x)).powi(m as i32)
}

/// Bump on `[1/2, 2]` rising on `[1/2, 1]` and falling on `[1, 2]`.
fn window_bump(m: u32, u: f64) -> f64 {
    if u <= 1.0 {
        smoothstep(m, 2.0 * u - 1.0)
    } else {
        1.0 - smoothstep(m, u - 1.0)
    }
}

fn binomial(n: u64, k: u64) -> f64 {
    let mut acc = 1.0;
    for i in 0..k {
        acc *= (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_split_examples() {
        let w = WeightParams::new(0.5, 0.0, 1.0).unwrap();
        assert_eq!(w.j0, 0);
        assert!((w.sigma_prime - 0.5).abs() < 1e-15);
        let w = WeightParams::new(1.0, 0.0, 1.0).unwrap();
        assert_eq!((w.j0, w.sigma_prime), (0, 1.0));
        let w = WeightParams::new(1.7, 0.0, 1.0).unwrap();
        assert_eq!(w.j0, 1);
        assert!((w.sigma_prime - 0.7).abs() < 1e-12);
    }

    #[test]
    fn weight_constraints_name_field() {
        match WeightParams::new(0.5, 0.0, 0.4) {
            Err(Error::Domain { field, .. }) => assert_eq!(field, "s1"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(WeightParams::new(0.5, -0.5, 1.0).is_err());
    }

    #[test]
    fn lebesgue_endpoints() {
        let two = LebesgueExponent::new(2.0).unwrap();
        assert_eq!((two.alpha, two.p_prime), (0.0, 2.0));
        let inf = LebesgueExponent::new(f64::INFINITY).unwrap();
        assert_eq!((inf.alpha, inf.p_prime), (1.0, 1.0));
        let four = LebesgueExponent::new(4.0).unwrap();
        assert!((four.alpha - 0.5).abs() < 1e-15);
        assert!((1.0 / four.p + 1.0 / four.p_prime - 1.0).abs() < 1e-15);
        assert!(LebesgueExponent::new(1.5).is_err());
    }

    #[test]
    fn smoothstep_shape() {
        for m in 1..6 {
            assert_eq!(smoothstep(m, 0.0), 0.0);
            assert!((smoothstep(m, 1.0 - 1e-15) - 1.0).abs() < 1e-12);
            assert!((smoothstep(m, 0.5) - 0.5).abs() < 1e-14);
            // derivative matches finite difference
            let h = 1e-6;
            for &x in &[0.2, 0.45, 0.8] {
                let fd = (smoothstep(m, x + h) - smoothstep(m, x - h)) / (2.0 * h);
                assert!((fd - smoothstep_derivative(m, x)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn chi_profile() {
        let c = CutoffSpec::chi(1.0).unwrap();
        assert_eq!(c.eval(0.9), 0.0);
        assert_eq!(c.eval(1.6), 1.0);
        let mut prev = 0.0;
        for i in 0..=100 {
            let v = c.eval(1.0 + 0.005 * i as f64);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn psi_vanishes_outside_support() {
        let c = CutoffSpec::new(CutoffKind::PsiAA, 1.0, 10.0).unwrap();
        assert_eq!(c.eval(0.99), 0.0);
        assert_eq!(c.eval(10.0), 0.0);
        assert_eq!(c.eval(3.0), 1.0);
        assert!(CutoffSpec::new(CutoffKind::PsiAA, 1.0, 2.0).is_err());
    }
}
