//! Gauss–Legendre panels and spherical rules.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{Error, Result};

/// Nodes and weights of a one-dimensional rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule1d {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1d {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Gauss–Legendre rule with `n` points on `[a, b]`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Rule1d {
    let n = NonZeroUsize::new(n.max(1)).expect("nonzero");
    let rule = GaussLegendre::new(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    let mut pairs: Vec<(f64, f64)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (mid + half * x, half * w))
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    Rule1d {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

/// Composite rule: `[a, b]` split into equal panels no wider than `max_width`,
/// each carrying an `order`-point Gauss–Legendre rule.
pub fn composite(a: f64, b: f64, max_width: f64, order: usize) -> Rule1d {
    let span = b - a;
    if span <= 0.0 {
        return Rule1d { nodes: vec![], weights: vec![] };
    }
    let panels = ((span / max_width).ceil() as usize).max(1);
    composite_n(a, b, panels, order)
}

pub fn composite_n(a: f64, b: f64, panels: usize, order: usize) -> Rule1d {
    let base = gauss_legendre(order, -1.0, 1.0);
    let h = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (x, w) in base.nodes.iter().zip(&base.weights) {
            nodes.push(lo + 0.5 * h * (x + 1.0));
            weights.push(0.5 * h * w);
        }
    }
    Rule1d { nodes, weights }
}

/// Composite rule on `[a, b]` whose panel edges are supplied explicitly.
pub fn composite_breaks(breaks: &[f64], order: usize) -> Rule1d {
    let base = gauss_legendre(order, -1.0, 1.0);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for pair in breaks.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if hi <= lo {
            continue;
        }
        let h = hi - lo;
        for (x, w) in base.nodes.iter().zip(&base.weights) {
            nodes.push(lo + 0.5 * h * (x + 1.0));
            weights.push(0.5 * h * w);
        }
    }
    Rule1d { nodes, weights }
}

/// Geometrically graded breakpoints from `a` to `b` starting with width `h0`.
pub fn graded_breaks(a: f64, b: f64, h0: f64, ratio: f64, max_width: f64) -> Vec<f64> {
    let mut out = vec![a];
    let mut h = h0;
    let mut x = a;
    while x < b {
        x = (x + h.min(max_width)).min(b);
        out.push(x);
        h *= ratio;
    }
    out
}

/// Directions on the unit sphere with weights summing to 4π.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalRule {
    pub directions: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    /// Highest total polynomial degree integrated exactly.
    pub degree: usize,
}

const LEBEDEV_SIZES: [usize; 5] = [6, 14, 26, 38, 50];

/// Sizes accepted by [`spherical_rule`] up to `limit` points.
pub fn supported_angular_sizes(limit: usize) -> Vec<usize> {
    let mut sizes: Vec<usize> = LEBEDEV_SIZES.to_vec();
    let mut m = 2;
    while 2 * m * m <= limit {
        let n = 2 * m * m;
        if !sizes.contains(&n) {
            sizes.push(n);
        }
        m += 1;
    }
    sizes.retain(|&n| n <= limit);
    sizes.sort_unstable();
    sizes
}

/// Lebedev rules for 6, 14, 26, 38, 50 points, otherwise a Gauss–Legendre ×
/// trapezoid product rule with `2m²` points.
pub fn spherical_rule(n: usize) -> Result<SphericalRule> {
    let (dirs, w, degree) = match n {
        6 => {
            let mut d = Vec::new();
            let mut w = Vec::new();
            push_a1(&mut d, &mut w, 1.0 / 6.0);
            (d, w, 3)
        }
        14 => {
            let mut d = Vec::new();
            let mut w = Vec::new();
            push_a1(&mut d, &mut w, 1.0 / 15.0);
            push_a3(&mut d, &mut w, 3.0 / 40.0);
            (d, w, 5)
        }
        26 => {
            let mut d = Vec::new();
            let mut w = Vec::new();
            push_a1(&mut d, &mut w, 1.0 / 21.0);
            push_a2(&mut d, &mut w, 4.0 / 105.0);
            push_a3(&mut d, &mut w, 9.0 / 280.0);
            (d, w, 7)
        }
        38 => {
            let mut d = Vec::new();
            let mut w = Vec::new();
            push_a1(&mut d, &mut w, 1.0 / 105.0);
            push_a3(&mut d, &mut w, 9.0 / 280.0);
            push_c1(&mut d, &mut w, 0.459_700_843_380_983_1, 1.0 / 35.0);
            (d, w, 9)
        }
        50 => {
            let mut d = Vec::new();
            let mut w = Vec::new();
            push_a1(&mut d, &mut w, 4.0 / 315.0);
            push_a2(&mut d, &mut w, 64.0 / 2835.0);
            push_a3(&mut d, &mut w, 27.0 / 1280.0);
            push_b1(&mut d, &mut w, 1.0 / 11f64.sqrt(), 14641.0 / 725_760.0);
            (d, w, 11)
        }
        _ => {
            let m = ((n / 2) as f64).sqrt().round() as usize;
            if m < 2 || 2 * m * m != n {
                return Err(Error::Config(format!(
                    "unsupported angular rule size {n}; use one of {:?} or 2m^2",
                    LEBEDEV_SIZES
                )));
            }
            return Ok(product_rule(m));
        }
    };
    let four_pi = 4.0 * std::f64::consts::PI;
    Ok(SphericalRule {
        directions: dirs,
        weights: w.into_iter().map(|x| x * four_pi).collect(),
        degree,
    })
}

fn product_rule(m: usize) -> SphericalRule {
    let gl = gauss_legendre(m, -1.0, 1.0);
    let nphi = 2 * m;
    let dphi = 2.0 * std::f64::consts::PI / nphi as f64;
    let mut directions = Vec::with_capacity(m * nphi);
    let mut weights = Vec::with_capacity(m * nphi);
    for (&mu, &wm) in gl.nodes.iter().zip(&gl.weights) {
        let st = (1.0 - mu * mu).sqrt();
        for k in 0..nphi {
            let phi = (k as f64 + 0.5) * dphi;
            directions.push([st * phi.cos(), st * phi.sin(), mu]);
            weights.push(wm * dphi);
        }
    }
    SphericalRule { directions, weights, degree: 2 * m - 1 }
}

fn push_a1(d: &mut Vec<[f64; 3]>, w: &mut Vec<f64>, wt: f64) {
    for axis in 0..3 {
        for s in [1.0, -1.0] {
            let mut p = [0.0; 3];
            p[axis] = s;
            d.push(p);
            w.push(wt);
        }
    }
}

fn push_a2(d: &mut Vec<[f64; 3]>, w: &mut Vec<f64>, wt: f64) {
    let c = std::f64::consts::FRAC_1_SQRT_2;
    for zero in 0..3 {
        for s1 in [1.0, -1.0] {
            for s2 in [1.0, -1.0] {
                let mut p = [0.0; 3];
                let (i, j) = match zero {
                    0 => (1, 2),
                    1 => (0, 2),
                    _ => (0, 1),
                };
                p[i] = s1 * c;
                p[j] = s2 * c;
                d.push(p);
                w.push(wt);
            }
        }
    }
}

fn push_a3(d: &mut Vec<[f64; 3]>, w: &mut Vec<f64>, wt: f64) {
    let c = 1.0 / 3f64.sqrt();
    for sx in [1.0, -1.0] {
        for sy in [1.0, -1.0] {
            for sz in [1.0, -1.0] {
                d.push([sx * c, sy * c, sz * c]);
                w.push(wt);
            }
        }
    }
}

/// 24 points (±l, ±l, ±m) with every placement of m.
fn push_b1(d: &mut Vec<[f64; 3]>, w: &mut Vec<f64>, l: f64, wt: f64) {
    let m = (1.0 - 2.0 * l * l).sqrt();
    for pos in 0..3 {
        for signs in 0..8u32 {
            let mut p = [l, l, l];
            p[pos] = m;
            for (k, v) in p.iter_mut().enumerate() {
                if signs & (1 << k) != 0 {
                    *v = -*v;
                }
            }
            d.push(p);
            w.push(wt);
        }
    }
}

/// 24 points (±p, ±q, 0) with all placements of the zero and both orders of p, q.
fn push_c1(d: &mut Vec<[f64; 3]>, w: &mut Vec<f64>, p: f64, wt: f64) {
    let q = (1.0 - p * p).sqrt();
    for zero in 0..3 {
        let (i, j) = match zero {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        for (a, b) in [(p, q), (q, p)] {
            for s1 in [1.0, -1.0] {
                for s2 in [1.0, -1.0] {
                    let mut v = [0.0; 3];
                    v[i] = s1 * a;
                    v[j] = s2 * b;
                    d.push(v);
                    w.push(wt);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sphere_monomial(a: u32, b: u32, c: u32) -> f64 {
        // exact ∫_{S²} x^a y^b z^c via Gamma functions
        if a % 2 == 1 || b % 2 == 1 || c % 2 == 1 {
            return 0.0;
        }
        let g = |x: f64| lgamma(x);
        let (ba, bb, bc) = ((a as f64 + 1.0) / 2.0, (b as f64 + 1.0) / 2.0, (c as f64 + 1.0) / 2.0);
        2.0 * (g(ba) + g(bb) + g(bc) - g(ba + bb + bc)).exp()
    }

    fn lgamma(x: f64) -> f64 {
        // half-integer and integer arguments only
        let mut acc = 0.0;
        let mut y = x;
        while y > 1.0 + 1e-12 {
            y -= 1.0;
            acc += y.ln();
        }
        if (y - 0.5).abs() < 1e-12 {
            acc + 0.5 * PI.ln()
        } else {
            acc
        }
    }

    #[test]
    fn gl_integrates_polynomials() {
        let r = gauss_legendre(5, 0.0, 2.0);
        let v = r.integrate(|x| x.powi(9));
        assert!((v - 2f64.powi(10) / 10.0).abs() < 1e-11);
    }

    #[test]
    fn composite_covers_interval() {
        let r = composite(1.0, 4.0, 0.7, 4);
        assert_eq!(r.len(), 5 * 4);
        assert!((r.weights.iter().sum::<f64>() - 3.0).abs() < 1e-13);
    }

    #[test]
    fn spherical_rules_reach_their_degree() {
        for n in [6, 14, 26, 38, 50, 8, 18, 32, 72] {
            let rule = spherical_rule(n).unwrap();
            assert_eq!(rule.directions.len(), n);
            for d in &rule.directions {
                let norm = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                assert!((norm - 1.0).abs() < 1e-14);
            }
            let deg = rule.degree as u32;
            for a in 0..=deg {
                for b in 0..=deg - a {
                    for c in 0..=deg - a - b {
                        let q: f64 = rule
                            .directions
                            .iter()
                            .zip(&rule.weights)
                            .map(|(d, w)| w * d[0].powi(a as i32) * d[1].powi(b as i32) * d[2].powi(c as i32))
                            .sum();
                        let exact = sphere_monomial(a, b, c);
                        assert!((q - exact).abs() < 1e-12, "n={n} ({a},{b},{c}) {q} vs {exact}");
                    }
                }
            }
        }
    }

    #[test]
    fn unsupported_size_rejected() {
        assert!(matches!(spherical_rule(7), Err(Error::Config(_))));
    }
}
