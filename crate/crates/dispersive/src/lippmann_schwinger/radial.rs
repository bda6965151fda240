//! Partial-wave route for radial potentials: each angular channel reduces to
//! `−u″ + (ℓ(ℓ+1)/r² + V − w²) u = f` on a uniform radial grid, solved with
//! Numerov's scheme together with its λ-derivatives.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use super::potential::PotentialSpec;
use super::ResolventHandle;
use crate::error::{Error, Result};
use crate::free_resolvent::{ComplexFrequency, Sign};
use crate::norm_estimation::lanczos_top_singular_value;
use crate::{bracket, norm3, Point};

const C0: Complex64 = Complex64::new(0.0, 0.0);
const RESCALE: f64 = 1e150;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialSettings {
    /// Grid spacing; default `min(0.02, 0.12/|w|)`.
    pub step: Option<f64>,
    pub max_ell: usize,
    /// Relative size below which a channel counts as negligible.
    pub ell_tol: f64,
    /// Same for coincident points, where channels decay only algebraically;
    /// compared against `ℓ` times the channel contribution.
    pub diag_tol: f64,
    pub lanczos_steps: usize,
    pub lanczos_tol: f64,
}

impl Default for RadialSettings {
    fn default() -> Self {
        Self { step: None, max_ell: 2000, ell_tol: 1e-9, diag_tol: 1e-7, lanczos_steps: 240, lanczos_tol: 1e-7 }
    }
}

impl RadialSettings {
    pub fn refined(&self, h: f64) -> Self {
        Self { step: Some(h / 2.0), ..*self }
    }
}

/// Resolvent of `−Δ + V` for radial `V` on the ball of radius `r_max`, with
/// outgoing continuation beyond it.
#[derive(Debug, Clone)]
pub struct RadialResolvent {
    potential: PotentialSpec,
    freq: ComplexFrequency,
    settings: RadialSettings,
    h: f64,
    n: usize,
    v: Vec<f64>,
    /// `F(r) = ∫₀^r V(u) u du` at the grid nodes.
    f_cum: Vec<f64>,
}

/// Regular and outgoing channel solutions with their λ-derivatives.
#[derive(Debug, Clone)]
pub struct ChannelSolution {
    pub ell: usize,
    pub start: usize,
    pub phi: Vec<Vec<Complex64>>,
    pub psi: Vec<Vec<Complex64>>,
    /// Derivatives of `1/W`, `W = φ′ψ − φψ′`.
    pub winv: Vec<Complex64>,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn multinomial(n: usize, a: usize, b: usize) -> f64 {
    binomial(n, a) * binomial(n - a, b)
}

/// `z^k ĥ_ℓ^{(k)}`-style data: derivatives `ĥ_ℓ^{(k)}(z)`, `k = 0..=order`, of
/// the outgoing Riccati–Hankel function, up to a common constant factor.
pub fn riccati_hankel_derivatives(ell: usize, z: Complex64, order: usize) -> Vec<Complex64> {
    let i = Complex64::new(0.0, 1.0);
    let e = (i * z).exp();
    let mut prev = -i * e; // ĥ₀
    let mut prev_d = e;
    let mut cur = -e * (Complex64::new(1.0, 0.0) + i / z); // ĥ₁
    if ell == 0 {
        cur = prev;
    } else {
        for l in 1..ell {
            let next = cur * ((2 * l + 1) as f64) / z - prev;
            prev = cur;
            cur = next;
            if cur.norm() > RESCALE {
                prev /= RESCALE;
                cur /= RESCALE;
            }
        }
        // ĥ′_ℓ = ĥ_{ℓ−1} − (ℓ/z) ĥ_ℓ
        prev_d = prev - cur * (ell as f64) / z;
    }
    let big_l = (ell * (ell + 1)) as f64;
    // q(z) = L/z² − 1 and its derivatives
    let q = |j: usize| -> Complex64 {
        if j == 0 {
            big_l / (z * z) - 1.0
        } else {
            let fact: f64 = (1..=j + 1).map(|m| m as f64).product();
            let sgn = if j % 2 == 0 { 1.0 } else { -1.0 };
            big_l * sgn * fact / z.powu(j as u32 + 2)
        }
    };
    let mut d = vec![cur, prev_d];
    while d.len() <= order {
        let m = d.len() - 2;
        let mut acc = C0;
        for j in 0..=m {
            acc += q(j) * d[m - j] * binomial(m, j);
        }
        d.push(acc);
    }
    d.truncate(order + 1);
    d
}

impl RadialResolvent {
    pub fn new(potential: &PotentialSpec, freq: &ComplexFrequency, r_max: f64, settings: RadialSettings) -> Result<Self> {
        if !potential.radial {
            return Err(Error::domain("potential.radial", "partial-wave route needs a radial potential"));
        }
        if !(r_max > 0.0) {
            return Err(Error::domain("r_max", "must be positive"));
        }
        if freq.lambda <= 0.0 && freq.epsilon <= 0.0 {
            return Err(Error::domain("freq", "needs epsilon > 0 or lambda > 0"));
        }
        let wn = freq.w().norm();
        let h0 = settings.step.unwrap_or_else(|| (0.12 / wn).min(0.02));
        let n = (r_max / h0).ceil().max(16.0) as usize;
        let h = r_max / n as f64;
        let v: Vec<f64> = (0..=n).map(|i| potential.radial_value(i as f64 * h)).collect();
        let gl = crate::quadrature::gauss_legendre(4, 0.0, h);
        let mut f_cum = vec![0.0; n + 1];
        for i in 0..n {
            let lo = i as f64 * h;
            f_cum[i + 1] = f_cum[i] + gl.integrate(|t| potential.radial_value(lo + t) * (lo + t));
        }
        Ok(Self { potential: *potential, freq: *freq, settings, h, n, v, f_cum })
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn r_max(&self) -> f64 {
        self.h * self.n as f64
    }

    pub fn settings(&self) -> &RadialSettings {
        &self.settings
    }

    /// `w` of the `+` branch; the `−` branch is recovered by conjugation.
    fn w_plus(&self) -> Complex64 {
        Complex64::new(self.freq.lambda, self.freq.epsilon)
    }

    fn conj_if_minus(&self, z: Complex64) -> Complex64 {
        match self.freq.sign {
            Sign::Plus => z,
            Sign::Minus => z.conj(),
        }
    }

    /// Channel solutions for the `+` branch, with or without the potential.
    pub fn channel(&self, ell: usize, order: usize, with_potential: bool) -> ChannelSolution {
        let (h, n) = (self.h, self.n);
        let w = self.w_plus();
        let w2 = w * w;
        let lfac = (ell * (ell + 1)) as f64;
        let q: Vec<Complex64> = (0..=n)
            .map(|i| {
                let r = i as f64 * h;
                let cent = if ell == 0 { 0.0 } else if i == 0 { f64::INFINITY } else { lfac / (r * r) };
                let v = if with_potential { self.v[i] } else { 0.0 };
                Complex64::new(cent + v, 0.0) - w2
            })
            .collect();
        let h12 = h * h / 12.0;
        // source of the k-th derivative equation: −2wk u_{k−1} − k(k−1) u_{k−2}
        let source = |u: &[Vec<Complex64>], k: usize, i: usize| -> Complex64 {
            let mut s = C0;
            if k >= 1 {
                s -= w * (2.0 * k as f64) * u[k - 1][i];
            }
            if k >= 2 {
                s -= u[k - 2][i] * (k * (k - 1)) as f64;
            }
            s
        };

        // first node where the centrifugal term is mild enough for Numerov; below
        // it both solutions follow their power laws
        let start = if ell == 0 { 0 } else { ((1.3 * lfac.sqrt()).ceil() as usize).max(1).min(n.saturating_sub(8)) };
        let mut phi = vec![vec![C0; n + 1]; order + 1];
        {
            let (r0, r1) = (start as f64 * h, (start + 1) as f64 * h);
            phi[0][start] = Complex64::new((r0 / r1).powi(ell as i32 + 1), 0.0);
            phi[0][start + 1] = Complex64::new(1.0, 0.0);
            for i in start + 1..n {
                // orders are coupled only through lower ones; advance each in turn
                for k in 0..=order {
                    let s_prev = if k == 0 { C0 } else { source(&phi, k, i - 1) };
                    let s_cur = if k == 0 { C0 } else { source(&phi, k, i) };
                    let s_next = if k == 0 { C0 } else { source(&phi, k, i + 1) };
                    let num = phi[k][i] * 2.0 * (Complex64::new(1.0, 0.0) + q[i] * (5.0 * h12))
                        - phi[k][i - 1] * (Complex64::new(1.0, 0.0) - q[i - 1] * h12)
                        + (s_next + s_cur * 10.0 + s_prev) * h12;
                    phi[k][i + 1] = num / (Complex64::new(1.0, 0.0) - q[i + 1] * h12);
                }
                if phi[0][i + 1].norm() > RESCALE {
                    for arr in phi.iter_mut() {
                        for x in arr[..=i + 1].iter_mut() {
                            *x /= RESCALE;
                        }
                    }
                }
            }
        }

        // outgoing solution from the Hankel data at the two outermost nodes
        let mut psi = vec![vec![C0; n + 1]; order + 1];
        for idx in [n - 1, n] {
            let r = idx as f64 * h;
            let d = riccati_hankel_derivatives(ell, w * r, order);
            for k in 0..=order {
                psi[k][idx] = d[k] * r.powi(k as i32);
            }
        }
        let norm0 = psi[0][n].norm().max(psi[0][n - 1].norm());
        if norm0 > 0.0 && !(1e-100..1e100).contains(&norm0) {
            for arr in psi.iter_mut() {
                arr[n - 1] /= norm0;
                arr[n] /= norm0;
            }
        }
        for i in (start + 1..n).rev() {
            for k in 0..=order {
                let s_prev = if k == 0 { C0 } else { source(&psi, k, i + 1) };
                let s_cur = if k == 0 { C0 } else { source(&psi, k, i) };
                let qn = q[i - 1];
                let s_next = if k == 0 || (i - 1 == 0 && ell > 0) { C0 } else { source(&psi, k, i - 1) };
                let num = psi[k][i] * 2.0 * (Complex64::new(1.0, 0.0) + q[i] * (5.0 * h12))
                    - psi[k][i + 1] * (Complex64::new(1.0, 0.0) - q[i + 1] * h12)
                    + (s_next + s_cur * 10.0 + s_prev) * h12;
                if i - 1 == 0 && ell > 0 {
                    psi[k][0] = C0;
                } else {
                    psi[k][i - 1] = num / (Complex64::new(1.0, 0.0) - qn * h12);
                }
            }
            if psi[0][i - 1].norm() > RESCALE {
                for arr in psi.iter_mut() {
                    for x in arr[i - 1..].iter_mut() {
                        *x /= RESCALE;
                    }
                }
            }
        }

        if start > 0 {
            fill_power_law(&mut phi, &mut psi, start, ell);
        }

        // scale both to unit maximum; the Wronskian is taken where the product
        // is largest, since far from it one factor may have underflowed
        let peak = |u: &[Complex64]| u.iter().map(|z| z.norm()).filter(|x| x.is_finite()).fold(0.0, f64::max);
        let (cp, cq) = (peak(&phi[0][start..]), peak(&psi[0][start..]));
        let n_ref = (start + 3..=n - 3)
            .max_by(|&a, &b| {
                let pa = (phi[0][a] / cp).norm() * (psi[0][a] / cq).norm();
                let pb = (phi[0][b] / cp).norm() * (psi[0][b] / cq).norm();
                pa.total_cmp(&pb)
            })
            .unwrap_or(n - 3);
        for arr in phi.iter_mut() {
            for x in arr.iter_mut() {
                *x /= cp;
            }
        }
        for arr in psi.iter_mut() {
            for x in arr.iter_mut() {
                *x /= cq;
            }
        }
        let d4 = |u: &[Complex64], i: usize| -> Complex64 {
            (u[i - 2] - u[i - 1] * 8.0 + u[i + 1] * 8.0 - u[i + 2]) / (12.0 * h)
        };
        let wr: Vec<Complex64> = (0..=order)
            .map(|m| {
                (0..=m)
                    .map(|j| {
                        (d4(&phi[j], n_ref) * psi[m - j][n_ref] - phi[j][n_ref] * d4(&psi[m - j], n_ref)) * binomial(m, j)
                    })
                    .sum()
            })
            .collect();
        // 1/W without squaring |W|, which can underflow for evanescent channels
        let m0 = wr[0].norm();
        let w0inv = (wr[0].conj() / m0) / m0;
        let mut winv = vec![w0inv];
        for m in 1..=order {
            let mut acc = C0;
            for j in 1..=m {
                acc += wr[j] * winv[m - j] * binomial(m, j);
            }
            winv.push(-acc * w0inv);
        }
        ChannelSolution { ell, start, phi, psi, winv }
    }
}

impl ChannelSolution {
    /// `∂^k g_ℓ(r_i, r_j)` on grid indices.
    pub fn green(&self, i: usize, j: usize, k: usize) -> Complex64 {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        let mut acc = C0;
        for p in 0..=k {
            for q in 0..=(k - p) {
                let c = k - p - q;
                acc += self.phi[p][a] * self.psi[q][b] * self.winv[c] * multinomial(k, p, q);
            }
        }
        acc
    }

    /// Same at arbitrary radii by six-point Lagrange interpolation.
    pub fn green_at(&self, h: f64, r: f64, rp: f64, k: usize) -> Complex64 {
        let (a, b) = if r <= rp { (r, rp) } else { (rp, r) };
        let l = self.ell as f64;
        let mut acc = C0;
        for p in 0..=k {
            let fa = interpolate(&self.phi[p], h, a, l + 1.0);
            for q in 0..=(k - p) {
                let c = k - p - q;
                acc += fa * interpolate(&self.psi[q], h, b, -l) * self.winv[c] * multinomial(k, p, q);
            }
        }
        acc
    }

    /// Separable pieces `(coef, A, B)` with `∂^k g = Σ coef·A(r<)·B(r>)`.
    fn terms(&self, k: usize) -> Vec<(Complex64, &[Complex64], &[Complex64])> {
        let mut out = Vec::new();
        for p in 0..=k {
            for q in 0..=(k - p) {
                let c = k - p - q;
                out.push((self.winv[c] * multinomial(k, p, q), self.phi[p].as_slice(), self.psi[q].as_slice()));
            }
        }
        out
    }
}

/// Nodes `1..start` get `φ ∝ r^{ℓ+1}`, `ψ ∝ r^{−ℓ}` matched at `start`; where
/// the product would leave the floating range both are set to zero.
fn fill_power_law(phi: &mut [Vec<Complex64>], psi: &mut [Vec<Complex64>], start: usize, ell: usize) {
    for i in 1..start {
        let ln_ratio = (start as f64 / i as f64).ln();
        let down = -(ell as f64 + 1.0) * ln_ratio;
        let up = ell as f64 * ln_ratio;
        let (fp, fq) = if up > 280.0 { (0.0, 0.0) } else { (down.exp(), up.exp()) };
        for k in 0..phi.len() {
            phi[k][i] = phi[k][start] * fp;
            psi[k][i] = psi[k][start] * fq;
        }
    }
}

/// Six-point Lagrange interpolation of `u(r)·r^{−p}`, rescaled back; with
/// `p` the power law of `u` near the origin the interpolant stays smooth even
/// where `u` changes by orders of magnitude per node.
fn interpolate(u: &[Complex64], h: f64, r: f64, p: f64) -> Complex64 {
    let n = u.len() - 1;
    let x = r / h;
    let base = (x.floor() as isize - 2).clamp(1, n as isize - 5) as usize;
    let mut acc = C0;
    for a in 0..6 {
        let xa = (base + a) as f64;
        let mut l = 1.0;
        for b in 0..6 {
            if a != b {
                let xb = (base + b) as f64;
                l *= (x - xb) / (xa - xb);
            }
        }
        acc += u[base + a] * (l * (p * (x / xa).ln()).exp());
    }
    acc
}

/// Semi-separable channel operator `x ↦ diag(√h a) G diag(b √h) x (+ shift·x)`
/// on `L²(0, r_max)`.
struct ChannelOperator<'a> {
    terms: Vec<(Complex64, &'a [Complex64], &'a [Complex64])>,
    a: Vec<f64>,
    b: Vec<f64>,
    scale: Complex64,
    shift: f64,
}

impl ChannelOperator<'_> {
    fn apply_generic(&self, x: &DVector<Complex64>, adjoint: bool) -> DVector<Complex64> {
        let n = x.len();
        let (left, right) = if adjoint { (&self.b, &self.a) } else { (&self.a, &self.b) };
        let mut y = DVector::from_element(n, C0);
        for &(coef, pa, pb) in &self.terms {
            let coef = if adjoint { (coef * self.scale).conj() } else { coef * self.scale };
            let ca = |i: usize| if adjoint { pa[i].conj() } else { pa[i] };
            let cb = |i: usize| if adjoint { pb[i].conj() } else { pb[i] };
            // forward prefix Σ_{j≤i} A_j z_j, backward suffix Σ_{j>i} B_j z_j
            let mut prefix = C0;
            let mut tmp = vec![C0; n];
            for i in 0..n {
                prefix += ca(i) * x[i] * right[i];
                tmp[i] = cb(i) * prefix;
            }
            let mut suffix = C0;
            for i in (0..n).rev() {
                tmp[i] += ca(i) * suffix;
                suffix += cb(i) * x[i] * right[i];
            }
            for i in 0..n {
                y[i] += coef * tmp[i] * left[i];
            }
        }
        if self.shift != 0.0 {
            y += x * Complex64::new(self.shift, 0.0);
        }
        y
    }
}

impl RadialResolvent {
    fn quadrature_sqrt(&self) -> Vec<f64> {
        (0..=self.n)
            .map(|i| if i == self.n { (0.5 * self.h).sqrt() } else { self.h.sqrt() })
            .collect()
    }

    /// Largest singular value of the channel operator with kernel
    /// `f(r) ∂^k g_ℓ(r, r′) g(r′)` (plus `shift` times the identity).
    fn channel_operator_norm(&self, sol: &ChannelSolution, k: usize, f: &[f64], g: &[f64], scale: f64, shift: f64) -> Result<f64> {
        let sq = self.quadrature_sqrt();
        let a: Vec<f64> = f.iter().zip(&sq).map(|(x, s)| x * s).collect();
        let b: Vec<f64> = g.iter().zip(&sq).map(|(x, s)| x * s).collect();
        // row 0 is r = 0 where u vanishes
        let op = ChannelOperator { terms: sol.terms(k), a, b, scale: Complex64::new(scale, 0.0), shift };
        let s = &self.settings;
        lanczos_top_singular_value(
            self.n + 1,
            s.lanczos_steps,
            s.lanczos_tol,
            |x| op.apply_generic(x, false),
            |x| op.apply_generic(x, true),
        )
    }

    fn grid_weights<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        (0..=self.n).map(|i| f(i as f64 * self.h)).collect()
    }

    /// Scans channels `ℓ = 0, 1, …` in parallel batches until the channel
    /// values fall below `baseline + 0.2 (max − baseline)` three times running.
    fn scan_channels<F>(&self, min_ell: usize, baseline: f64, f: F) -> Result<ChannelScan>
    where
        F: Fn(usize) -> Result<f64> + Sync,
    {
        let batch = rayon::current_num_threads().clamp(4, 16);
        let mut values: Vec<f64> = Vec::new();
        let mut low_run = 0;
        'outer: while values.len() <= self.settings.max_ell {
            let l0 = values.len();
            let l1 = (l0 + batch).min(self.settings.max_ell + 1);
            let chunk: Vec<f64> = (l0..l1).into_par_iter().map(&f).collect::<Result<_>>()?;
            for v in chunk {
                values.push(v);
                let ell = values.len() - 1;
                let max = values.iter().cloned().fold(f64::MIN, f64::max);
                if ell >= min_ell && v - baseline <= 0.2 * (max - baseline) {
                    low_run += 1;
                    if low_run >= 3 {
                        break 'outer;
                    }
                } else {
                    low_run = 0;
                }
            }
            if l1 > self.settings.max_ell {
                return Err(Error::Budget(format!("channel scan reached max_ell = {}", self.settings.max_ell)));
            }
        }
        let (arg, &sup) = values.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("nonempty");
        Ok(ChannelScan { sup, argmax: arg, channels: values })
    }

    /// `‖⟨x⟩^{−a} ∂^k R ⟨x⟩^{−b}‖_{L²→L²}` (or of `R₀` when `free`).
    pub fn weighted_norm(&self, k: usize, a: f64, b: f64, free: bool) -> Result<ChannelScan> {
        let f = self.grid_weights(|r| bracket(r).powf(-a));
        let g = self.grid_weights(|r| bracket(r).powf(-b));
        self.scan_channels(2, 0.0, |ell| {
            let sol = self.channel(ell, k, !free);
            self.channel_operator_norm(&sol, k, &f, &g, 1.0, 0.0)
        })
    }

    /// `‖K_j‖` with `K_j = ⟨x⟩^{j+s₁} V R₀ ⟨x⟩^{−j−s₁}`.
    pub fn birman_schwinger_norm(&self, s1: f64) -> Result<ChannelScan> {
        let f = self.grid_weights(|r| bracket(r).powf(s1) * self.potential.radial_value(r));
        let g = self.grid_weights(|r| bracket(r).powf(-s1));
        self.scan_channels(2, 0.0, |ell| {
            let sol = self.channel(ell, 0, false);
            self.channel_operator_norm(&sol, 0, &f, &g, 1.0, 0.0)
        })
    }

    /// `‖(1 + K_j)^{−1}‖ = ‖1 − ⟨x⟩^{s₁} V R ⟨x⟩^{−s₁}‖`.
    pub fn birman_schwinger_inverse_norm(&self, s1: f64) -> Result<ChannelScan> {
        let f = self.grid_weights(|r| bracket(r).powf(s1) * self.potential.radial_value(r));
        let g = self.grid_weights(|r| bracket(r).powf(-s1));
        self.scan_channels(2, 1.0, |ell| {
            let sol = self.channel(ell, 0, true);
            self.channel_operator_norm(&sol, 0, &f, &g, -1.0, 1.0)
        })
    }

    /// `F(s)` by cubic Hermite interpolation of the node table, constant past
    /// `r_max` where the channel equations drop the potential.
    fn f_cumulative(&self, s: f64) -> f64 {
        let (h, n) = (self.h, self.n);
        let x = s.max(0.0) / h;
        if x >= n as f64 {
            return self.f_cum[n];
        }
        let i = (x.floor() as usize).min(n - 1);
        let t = x - i as f64;
        let (d0, d1) = (self.v[i] * i as f64 * h * h, self.v[i + 1] * (i + 1) as f64 * h * h);
        let (t2, t3) = (t * t, t * t * t);
        self.f_cum[i] * (2.0 * t3 - 3.0 * t2 + 1.0)
            + d0 * (t3 - 2.0 * t2 + t)
            + self.f_cum[i + 1] * (-2.0 * t3 + 3.0 * t2)
            + d1 * (t3 - t2)
    }

    /// `∂^k` of the first Born term `−(R₀VR₀)(x, x)` at `|x| = r` (`+` branch):
    /// `−(1/8πr) ∫₀^∞ (2iρ)^k e^{2iwρ} (F(r+ρ) − F(|r−ρ|))/ρ dρ`.
    fn born_diagonal(&self, r: f64, k: usize) -> Complex64 {
        let w = self.w_plus();
        let width = (0.5 / w.norm()).min(0.25);
        let rule = crate::quadrature::composite(0.0, self.r_max() + r, width, 8);
        let i2 = Complex64::new(0.0, 2.0);
        let mut acc = C0;
        for (&rho, &wt) in rule.nodes.iter().zip(&rule.weights) {
            let shell = self.f_cumulative(r + rho) - self.f_cumulative((r - rho).abs());
            acc += (i2 * w * rho).exp() * (i2 * rho).powu(k as u32) * (wt * shell / rho);
        }
        -acc / (8.0 * PI * r)
    }

    /// Channel share of `∂^k (R₀VRVR₀)(x, x)` at `|x| = r`, i.e. of the
    /// scattered kernel with its first Born term removed.
    fn diagonal_remainder(&self, sv: &ChannelSolution, s0: &ChannelSolution, r: f64, k: usize) -> Complex64 {
        let (h, n) = (self.h, self.n);
        let l = s0.ell as f64;
        let phi_r: Vec<Complex64> = s0.phi.iter().map(|u| interpolate(u, h, r, l + 1.0)).collect();
        let psi_r: Vec<Complex64> = s0.psi.iter().map(|u| interpolate(u, h, r, -l)).collect();
        // a_ν(z) = dz V(z) ∂^ν g⁰(r, z)
        let a: Vec<Vec<Complex64>> = (0..=k)
            .map(|nu| {
                (0..=n)
                    .map(|i| {
                        let wz = if i == n { 0.5 * h } else { h } * self.v[i];
                        if wz == 0.0 {
                            return C0;
                        }
                        let below = (i as f64) * h < r;
                        let mut g = C0;
                        for p in 0..=nu {
                            for q in 0..=(nu - p) {
                                let pair = if below { s0.phi[p][i] * psi_r[q] } else { phi_r[p] * s0.psi[q][i] };
                                g += pair * s0.winv[nu - p - q] * multinomial(nu, p, q);
                            }
                        }
                        g * wz
                    })
                    .collect()
            })
            .collect();
        let mut acc = C0;
        for n2 in 0..=k {
            let terms = sv.terms(n2);
            for n1 in 0..=(k - n2) {
                let n3 = k - n1 - n2;
                let ga = apply_semi_separable(&terms, &a[n3]);
                let dot: Complex64 = a[n1].iter().zip(&ga).map(|(x, y)| x * y).sum();
                acc += dot * multinomial(k, n1, n2);
            }
        }
        acc
    }
}

/// `y_i = Σ_j Σ coef·A(min(i,j))·B(max(i,j)) x_j` in `O(n)` per term.
fn apply_semi_separable(terms: &[(Complex64, &[Complex64], &[Complex64])], x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    let mut y = vec![C0; n];
    for &(coef, pa, pb) in terms {
        let mut prefix = C0;
        let mut tmp = vec![C0; n];
        for i in 0..n {
            prefix += pa[i] * x[i];
            tmp[i] = pb[i] * prefix;
        }
        let mut suffix = C0;
        for i in (0..n).rev() {
            tmp[i] += pa[i] * suffix;
            suffix += pb[i] * x[i];
        }
        for i in 0..n {
            y[i] += coef * tmp[i];
        }
    }
    y
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelScan {
    pub sup: f64,
    pub argmax: usize,
    pub channels: Vec<f64>,
}

fn distinct(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut uniq: Vec<f64> = Vec::new();
    let idx = values
        .iter()
        .map(|&v| match uniq.iter().position(|&u| (u - v).abs() <= 1e-12 * v.max(1.0)) {
            Some(p) => p,
            None => {
                uniq.push(v);
                uniq.len() - 1
            }
        })
        .collect();
    (uniq, idx)
}

impl ResolventHandle for RadialResolvent {
    fn frequency(&self) -> ComplexFrequency {
        self.freq
    }

    fn potential(&self) -> &PotentialSpec {
        &self.potential
    }

    /// Distinct-radius pairs are summed over channels directly; coincident
    /// points take the first Born term in closed radial form plus the channel
    /// sum of the remainder, which converges much faster.
    fn scattered_kernel(&self, rows: &[Point], cols: &[Point], k: u32) -> Result<DMatrix<Complex64>> {
        let k = k as usize;
        let (m, nc) = (rows.len(), cols.len());
        if self.potential.is_zero() {
            return Ok(DMatrix::zeros(m, nc));
        }
        let rr: Vec<f64> = rows.iter().map(norm3).collect();
        let rc: Vec<f64> = cols.iter().map(norm3).collect();
        let rmax = self.r_max();
        if rr.iter().chain(&rc).any(|&r| r <= 0.0 || r > rmax - 3.0 * self.h) {
            return Err(Error::domain("grid", format!("radial route needs 0 < |x| < {rmax}")));
        }
        let same = DMatrix::from_fn(m, nc, |i, j| rows[i] == cols[j]);
        let (ua, ia) = distinct(&rr);
        let (ub, ib) = distinct(&rc);
        let diag_r: Vec<f64> = (0..m).filter(|&i| (0..nc).any(|j| same[(i, j)])).map(|i| rr[i]).collect();
        let (ud, _) = distinct(&diag_r);
        let diag_index = |r: f64| ud.iter().position(|&u| (u - r).abs() <= 1e-12 * r.max(1.0)).expect("listed");
        let cosg = DMatrix::from_fn(m, nc, |i, j| {
            let (x, y) = (&rows[i], &cols[j]);
            ((x[0] * y[0] + x[1] * y[1] + x[2] * y[2]) / (rr[i] * rc[j])).clamp(-1.0, 1.0)
        });
        let mut out = DMatrix::from_element(m, nc, C0);
        let born: Vec<Complex64> = ud.iter().map(|&r| self.conj_if_minus(self.born_diagonal(r, k))).collect();
        for i in 0..m {
            for j in 0..nc {
                if same[(i, j)] {
                    out[(i, j)] = born[diag_index(rr[i])];
                }
            }
        }
        let mut p_prev = DMatrix::from_element(m, nc, 0.0);
        let mut p_cur = DMatrix::from_element(m, nc, 1.0);
        let reach = rr.iter().chain(&rc).cloned().fold(0.0, f64::max);
        let min_ell = (self.freq.w().norm() * reach).ceil() as usize + 3;
        let batch = rayon::current_num_threads().clamp(4, 16);
        let mut ell = 0;
        let mut quiet = 0;
        let mut running = 0.0f64;
        loop {
            let hi = (ell + batch).min(self.settings.max_ell + 1);
            let parts: Vec<(DMatrix<Complex64>, Vec<Complex64>)> = (ell..hi)
                .into_par_iter()
                .map(|l| {
                    let sv = self.channel(l, k, true);
                    let s0 = self.channel(l, k, false);
                    let d = DMatrix::from_fn(ua.len(), ub.len(), |i, j| {
                        self.conj_if_minus(sv.green_at(self.h, ua[i], ub[j], k) - s0.green_at(self.h, ua[i], ub[j], k))
                    });
                    let rem = ud.iter().map(|&r| self.conj_if_minus(self.diagonal_remainder(&sv, &s0, r, k))).collect();
                    (d, rem)
                })
                .collect();
            for (d, rem) in parts {
                let l = ell;
                let pref = (2 * l + 1) as f64 / (4.0 * PI);
                let (mut off_max, mut diag_max) = (0.0f64, 0.0f64);
                for i in 0..m {
                    for j in 0..nc {
                        let c = if same[(i, j)] {
                            let c = rem[diag_index(rr[i])] * (pref / (rr[i] * rr[i]));
                            diag_max = diag_max.max(c.norm());
                            c
                        } else {
                            let c = d[(ia[i], ib[j])] * (pref * p_cur[(i, j)] / (rr[i] * rc[j]));
                            off_max = off_max.max(c.norm());
                            c
                        };
                        out[(i, j)] += c;
                    }
                }
                // Legendre recurrence to P_{ℓ+1}
                let lf = l as f64;
                let next = DMatrix::from_fn(m, nc, |i, j| {
                    ((2.0 * lf + 1.0) * cosg[(i, j)] * p_cur[(i, j)] - lf * p_prev[(i, j)]) / (lf + 1.0)
                });
                p_prev = std::mem::replace(&mut p_cur, next);
                running = running.max(out.iter().map(|z| z.norm()).fold(0.0, f64::max));
                ell += 1;
                let s = &self.settings;
                if l >= min_ell && off_max <= s.ell_tol * running && lf * diag_max <= s.diag_tol * running {
                    quiet += 1;
                    if quiet >= 4 {
                        return Ok(out);
                    }
                } else {
                    quiet = 0;
                }
            }
            if ell > self.settings.max_ell {
                return Err(Error::Budget(format!("partial-wave sum not converged by ell = {}", self.settings.max_ell)));
            }
        }
    }
}
