use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::free_resolvent::integer_split;
use crate::{bracket, norm3, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialFamily {
    /// `c ⟨x⟩^{−2−δ₀}`.
    InversePower,
    /// Normalized `c e^{−|x|²/ℓ²}`.
    Gaussian,
    /// Normalized `c (1 − |x|²/ρ²)³` on the ball of radius `ρ = scale`.
    CompactBump,
    Zero,
}

/// Real potential obeying `|V(x)| ≤ |c| ⟨x⟩^{−2−δ₀}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PotentialSpec {
    pub family: PotentialFamily,
    pub amplitude: f64,
    pub delta0: f64,
    pub radial: bool,
    pub k0: u32,
    pub delta0_prime: f64,
    /// Width of the Gaussian or radius of the bump.
    pub scale: f64,
    norm: f64,
}

impl PotentialSpec {
    pub fn new(family: PotentialFamily, amplitude: f64, delta0: f64, radial: bool, scale: f64) -> Result<Self> {
        if !(delta0 > 0.0) || !delta0.is_finite() {
            return Err(Error::domain("delta0", format!("must be positive, got {delta0}")));
        }
        if !amplitude.is_finite() {
            return Err(Error::domain("amplitude", "must be finite"));
        }
        if !(scale > 0.0) {
            return Err(Error::domain("scale", format!("must be positive, got {scale}")));
        }
        let (k0, delta0_prime) = integer_split(delta0);
        let mut v = Self { family, amplitude, delta0, radial, k0, delta0_prime, scale, norm: 1.0 };
        v.norm = v.envelope_ratio_max();
        Ok(v)
    }

    pub fn zero() -> Self {
        Self::new(PotentialFamily::Zero, 0.0, 1.0, true, 1.0).expect("valid")
    }

    pub fn inverse_power(amplitude: f64, delta0: f64) -> Result<Self> {
        Self::new(PotentialFamily::InversePower, amplitude, delta0, true, 1.0)
    }

    pub fn gaussian(amplitude: f64, width: f64) -> Result<Self> {
        Self::new(PotentialFamily::Gaussian, amplitude, 1.0, true, width)
    }

    pub fn compact_bump(amplitude: f64, radius: f64) -> Result<Self> {
        Self::new(PotentialFamily::CompactBump, amplitude, 1.0, true, radius)
    }

    pub fn with_radial(mut self, radial: bool) -> Self {
        self.radial = radial;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.family == PotentialFamily::Zero || self.amplitude == 0.0
    }

    fn shape(&self, r: f64) -> f64 {
        match self.family {
            PotentialFamily::InversePower => bracket(r).powf(-2.0 - self.delta0),
            PotentialFamily::Gaussian => (-(r / self.scale).powi(2)).exp(),
            PotentialFamily::CompactBump => {
                let u = r / self.scale;
                if u >= 1.0 {
                    0.0
                } else {
                    (1.0 - u * u).powi(3)
                }
            }
            PotentialFamily::Zero => 0.0,
        }
    }

    fn envelope_ratio_max(&self) -> f64 {
        if matches!(self.family, PotentialFamily::InversePower | PotentialFamily::Zero) {
            return 1.0;
        }
        let hi = match self.family {
            PotentialFamily::CompactBump => self.scale,
            _ => 12.0 * self.scale,
        };
        let n = 20_000;
        (0..=n)
            .map(|i| {
                let r = hi * i as f64 / n as f64;
                self.shape(r) * bracket(r).powf(2.0 + self.delta0)
            })
            .fold(1.0, f64::max)
            * (1.0 + 1e-9)
    }

    /// Radial profile `V(r)`.
    pub fn radial_value(&self, r: f64) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        self.amplitude * self.shape(r) / self.norm
    }

    pub fn value(&self, x: &Point) -> f64 {
        let r = norm3(x);
        let v = self.radial_value(r);
        if self.radial || r == 0.0 {
            v
        } else {
            // anisotropic modulation within the same envelope
            v * (2.0 + x[0] / bracket(r)) / 3.0
        }
    }

    /// Radius outside which `V` vanishes, if compactly supported.
    pub fn support_radius(&self) -> Option<f64> {
        match self.family {
            PotentialFamily::CompactBump => Some(self.scale),
            PotentialFamily::Zero => Some(0.0),
            _ => None,
        }
    }

    /// Upper bound for `∫_{|y|>R} |V(y)| dy / ∫_{|y|<R} |V(y)| dy`, from the
    /// envelope on the tail.
    pub fn tail_fraction(&self, r_trunc: f64) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        if let Some(s) = self.support_radius() {
            if r_trunc >= s {
                return 0.0;
            }
        }
        let c = self.amplitude.abs();
        // ∫_R^∞ 4π r² c r^{−2−δ₀} dr = 4π c R^{−δ₀}/δ₀
        let tail = 4.0 * std::f64::consts::PI * c * r_trunc.powf(-self.delta0) / self.delta0;
        let n = 2000;
        let h = r_trunc / n as f64;
        let inner: f64 = (0..n)
            .map(|i| {
                let r = (i as f64 + 0.5) * h;
                4.0 * std::f64::consts::PI * r * r * self.radial_value(r).abs() * h
            })
            .sum();
        tail / inner
    }
}
