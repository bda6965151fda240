//! Operator norms of sampled kernels and log–log exponent fits.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::free_resolvent::LebesgueExponent;
use crate::lippmann_schwinger::OperatorKernel;
use crate::dist3;

/// Seed of the deterministic power-iteration start vector.
pub const POWER_SEED: u64 = 0x5eed_0f_d15c;

/// Largest matrix dimension handled by a dense singular value decomposition.
pub const DENSE_LIMIT: usize = 160;

/// Endpoint norms of one kernel and their interpolation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedNormReport {
    pub norm_1_inf: f64,
    pub norm_2_2: f64,
    pub norm_p_interp: f64,
    pub lower_bound_p: f64,
    pub p: LebesgueExponent,
}

impl WeightedNormReport {
    pub fn from_kernel(k: &OperatorKernel, p: LebesgueExponent, trial_count: usize) -> Result<Self> {
        let norm_1_inf = kernel_sup_norm(k);
        let norm_2_2 = l2_operator_norm(k)?;
        let norm_p_interp = interpolated_norm(norm_2_2, norm_1_inf, &p);
        let lower_bound_p = test_pair_lower_bound(k, &p, trial_count);
        Ok(Self { norm_1_inf, norm_2_2, norm_p_interp, lower_bound_p, p })
    }
}

/// `max |K(x_i, y_j)|`, the L¹→L∞ norm of the sampled kernel.
pub fn kernel_sup_norm(k: &OperatorKernel) -> f64 {
    k.values.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Largest singular value of `diag(√w_row) K diag(√w_col)`.
pub fn l2_operator_norm(k: &OperatorKernel) -> Result<f64> {
    let b = k.scaled_matrix();
    if b.nrows().max(b.ncols()) <= DENSE_LIMIT {
        return Ok(dense_top_singular_value(&b));
    }
    power_top_singular_value(&b, 1e-6).map(|(s, _, _)| s)
}

/// Dense decomposition route.
pub fn dense_top_singular_value(b: &DMatrix<Complex64>) -> f64 {
    if b.is_empty() {
        return 0.0;
    }
    b.clone().svd(false, false).singular_values.iter().fold(0.0, |m: f64, &s| m.max(s))
}

/// Power iteration on `B*B`; returns `(σ, v, Bv/σ)`.
pub fn power_top_singular_value(b: &DMatrix<Complex64>, tol: f64) -> Result<(f64, DVector<Complex64>, DVector<Complex64>)> {
    let n = b.ncols();
    let bh = b.adjoint();
    power_iteration(n, tol, |v| b * v, |u| &bh * u)
}

/// Matrix-free power iteration for the top singular value of an operator
/// `apply: Cⁿ → Cᵐ` with adjoint `apply_adjoint`.
pub fn power_iteration<F, G>(n: usize, tol: f64, apply: F, apply_adjoint: G) -> Result<(f64, DVector<Complex64>, DVector<Complex64>)>
where
    F: Fn(&DVector<Complex64>) -> DVector<Complex64>,
    G: Fn(&DVector<Complex64>) -> DVector<Complex64>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
    let mut v = DVector::from_fn(n, |_, _| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
    let nv = v.norm();
    if nv == 0.0 {
        return Ok((0.0, v, DVector::zeros(0)));
    }
    v /= Complex64::new(nv, 0.0);
    let mut sigma = 0.0;
    let mut stable = 0;
    let max_iter = 20_000;
    let mut last_change = f64::INFINITY;
    for _ in 0..max_iter {
        let u = apply(&v);
        let s = u.norm();
        if s == 0.0 {
            return Ok((0.0, v, u));
        }
        let w = apply_adjoint(&u);
        let nw = w.norm();
        let next = (nw).sqrt();
        last_change = (next - sigma).abs() / next;
        sigma = next;
        if nw == 0.0 {
            return Ok((0.0, v, u));
        }
        v = w / Complex64::new(nw, 0.0);
        if last_change < tol * 1e-4 {
            stable += 1;
            if stable >= 3 {
                break;
            }
        } else {
            stable = 0;
        }
    }
    if last_change > tol {
        return Err(Error::Numerical(format!("power iteration stalled at relative change {last_change:e}")));
    }
    let u = apply(&v);
    let s = u.norm();
    let u = if s > 0.0 { u / Complex64::new(s, 0.0) } else { u };
    Ok((s, v, u))
}

/// Golub–Kahan bidiagonalization (no reorthogonalization) for the top
/// singular value of a matrix-free operator `Cⁿ → Cᵐ`; only the largest Ritz
/// value is used, which converges despite the loss of orthogonality.
pub fn lanczos_top_singular_value<F, G>(n: usize, max_steps: usize, tol: f64, apply: F, apply_adjoint: G) -> Result<f64>
where
    F: Fn(&DVector<Complex64>) -> DVector<Complex64>,
    G: Fn(&DVector<Complex64>) -> DVector<Complex64>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
    let mut v = DVector::from_fn(n, |_, _| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
    let nv = v.norm();
    v /= Complex64::new(nv, 0.0);
    let mut u = apply(&v);
    let mut alpha = vec![u.norm()];
    let mut beta: Vec<f64> = Vec::new();
    if alpha[0] == 0.0 {
        return Ok(0.0);
    }
    u /= Complex64::new(alpha[0], 0.0);
    let top = |alpha: &[f64], beta: &[f64]| -> f64 {
        let k = alpha.len();
        let b = DMatrix::from_fn(k, k, |i, j| {
            if i == j {
                alpha[i]
            } else if j == i + 1 && i < beta.len() {
                beta[i]
            } else {
                0.0
            }
        });
        b.singular_values().iter().cloned().fold(0.0, f64::max)
    };
    let mut last = alpha[0];
    let mut stable = 0;
    for step in 1..max_steps {
        let mut vn = apply_adjoint(&u) - &v * Complex64::new(*alpha.last().unwrap(), 0.0);
        let b = vn.norm();
        if b <= 1e-14 * last {
            return Ok(top(&alpha, &beta));
        }
        vn /= Complex64::new(b, 0.0);
        beta.push(b);
        let mut un = apply(&vn) - &u * Complex64::new(b, 0.0);
        let a = un.norm();
        if a <= 1e-14 * last {
            alpha.push(0.0);
            return Ok(top(&alpha, &beta));
        }
        un /= Complex64::new(a, 0.0);
        alpha.push(a);
        v = vn;
        u = un;
        if step % 3 == 0 {
            let s = top(&alpha, &beta);
            if (s - last).abs() <= tol * s {
                stable += 1;
                if stable >= 2 {
                    return Ok(s);
                }
            } else {
                stable = 0;
            }
            last = s;
        }
    }
    let s = top(&alpha, &beta);
    if (s - last).abs() > 1e3 * tol * s {
        return Err(Error::Numerical(format!("bidiagonalization did not settle: {last} vs {s}")));
    }
    Ok(s)
}

/// Riesz–Thorin combination `‖K‖₂₂^{1−α} ‖K‖₁∞^{α}`.
pub fn interpolated_norm(norm_2_2: f64, norm_1_inf: f64, p: &LebesgueExponent) -> f64 {
    let a = p.alpha;
    if a == 0.0 {
        return norm_2_2;
    }
    if a == 1.0 {
        return norm_1_inf;
    }
    if norm_2_2 == 0.0 || norm_1_inf == 0.0 {
        return 0.0;
    }
    (norm_2_2.ln() * (1.0 - a) + norm_1_inf.ln() * a).exp()
}

fn weighted_lp(values: &DVector<Complex64>, weights: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return values.iter().fold(0.0, |m, z| m.max(z.norm()));
    }
    let s: f64 = values.iter().zip(weights).map(|(z, w)| w * z.norm().powf(p)).sum();
    s.powf(1.0 / p)
}

/// `‖K g‖_p / ‖g‖_{p′}` with the weighted discrete norms.
fn quotient(k: &OperatorKernel, g: &DVector<Complex64>, p: &LebesgueExponent) -> f64 {
    let gw = DVector::from_iterator(g.len(), g.iter().zip(&k.col_weights).map(|(z, w)| z * *w));
    let kg = &k.values * gw;
    let den = weighted_lp(g, &k.col_weights, p.p_prime);
    if den == 0.0 {
        return 0.0;
    }
    weighted_lp(&kg, &k.row_weights, p.p) / den
}

/// Witness lower bound for the L^{p′}→L^p norm: point pairs at the kernel
/// maximum, the top singular pair and `trial_count` Gaussian bumps. The dual
/// test function is the extremal one for each `g`, so each quotient equals
/// `|⟨Kg, h⟩| / (‖g‖_{p′} ‖h‖_{p′})` for the best `h`.
pub fn test_pair_lower_bound(k: &OperatorKernel, p: &LebesgueExponent, trial_count: usize) -> f64 {
    let (m, n) = (k.values.nrows(), k.values.ncols());
    if m == 0 || n == 0 {
        return 0.0;
    }
    let mut best: f64 = 0.0;
    // point pair at the largest entry
    let mut jmax = 0;
    let mut vmax = -1.0;
    for j in 0..n {
        for i in 0..m {
            let v = k.values[(i, j)].norm();
            if v > vmax {
                vmax = v;
                jmax = j;
            }
        }
    }
    let mut e = DVector::zeros(n);
    e[jmax] = Complex64::new(1.0, 0.0);
    best = best.max(quotient(k, &e, p));
    // top singular pair
    let b = k.scaled_matrix();
    if let Ok((_, v, _)) = power_top_singular_value(&b, 1e-8) {
        let g = DVector::from_iterator(n, v.iter().zip(&k.col_weights).map(|(z, w)| z / w.sqrt()));
        best = best.max(quotient(k, &g, p));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED ^ 0xb0b);
    let scale = k
        .col_grid
        .iter()
        .fold(0.0f64, |acc, q| acc.max(crate::norm3(q)))
        .max(1.0);
    for _ in 0..trial_count {
        let c = rng.gen_range(0..n);
        let width = scale * 10f64.powf(rng.gen_range(-2.0..0.0));
        let centre = k.col_grid[c];
        let g = DVector::from_iterator(
            n,
            k.col_grid.iter().map(|q| Complex64::new((-(dist3(q, &centre) / width).powi(2)).exp(), 0.0)),
        );
        best = best.max(quotient(k, &g, p));
    }
    best
}

/// Model used by [`fit_decay`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `log v = c + slope · log t`.
    PurePower,
    /// `log v = c − β log t + γ log log(1 + t)`.
    PowerLog,
}

/// Sample requirements of a fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitPolicy {
    pub min_samples: usize,
    pub min_decades: f64,
}

impl Default for FitPolicy {
    /// Four samples over three octaves (`8 = 10^0.903`).
    fn default() -> Self {
        Self { min_samples: 4, min_decades: 0.9 }
    }
}

/// Result of a log–log least-squares fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub abscissae: Vec<f64>,
    pub values: Vec<f64>,
    pub model: FitModel,
    /// Coefficient of `log t`; decay shows as a negative slope.
    pub slope: f64,
    /// Power `γ` of the logarithmic factor (power-log model only).
    pub log_power: f64,
    pub intercept: f64,
    /// RMS residual of the log values.
    pub residual: f64,
    /// Power-log fit with the slope held fixed, if requested.
    pub constrained: Option<ConstrainedLogFit>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstrainedLogFit {
    pub beta: f64,
    pub log_power: f64,
    pub intercept: f64,
    pub residual: f64,
}

pub fn fit_decay(abscissae: &[f64], values: &[f64], model: FitModel) -> Result<DecayFit> {
    fit_decay_with(abscissae, values, model, &FitPolicy::default())
}

pub fn fit_decay_with(abscissae: &[f64], values: &[f64], model: FitModel, policy: &FitPolicy) -> Result<DecayFit> {
    check_samples(abscissae, values, policy)?;
    let lt: Vec<f64> = abscissae.iter().map(|t| t.ln()).collect();
    let lv: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let (coef, residual) = match model {
        FitModel::PurePower => least_squares(&[&ones(lt.len()), &lt], &lv)?,
        FitModel::PowerLog => {
            let ll = loglog(abscissae)?;
            least_squares(&[&ones(lt.len()), &lt, &ll], &lv)?
        }
    };
    Ok(DecayFit {
        abscissae: abscissae.to_vec(),
        values: values.to_vec(),
        model,
        slope: coef[1],
        log_power: if model == FitModel::PowerLog { coef[2] } else { 0.0 },
        intercept: coef[0],
        residual,
        constrained: None,
    })
}

/// Power-log fit with `β` fixed: `log v + β log t = c + γ log log(1 + t)`.
pub fn fit_power_log_constrained(abscissae: &[f64], values: &[f64], beta: f64) -> Result<ConstrainedLogFit> {
    check_samples(abscissae, values, &FitPolicy::default())?;
    let ll = loglog(abscissae)?;
    let y: Vec<f64> = abscissae.iter().zip(values).map(|(t, v)| v.ln() + beta * t.ln()).collect();
    let (coef, residual) = least_squares(&[&ones(y.len()), &ll], &y)?;
    Ok(ConstrainedLogFit { beta, log_power: coef[1], intercept: coef[0], residual })
}

fn ones(n: usize) -> Vec<f64> {
    vec![1.0; n]
}

fn loglog(t: &[f64]) -> Result<Vec<f64>> {
    t.iter()
        .map(|&t| {
            let l = (1.0 + t).ln();
            if l <= 0.0 {
                Err(Error::Fit("log log(1 + t) undefined".into()))
            } else {
                Ok(l.ln())
            }
        })
        .collect()
}

fn check_samples(abscissae: &[f64], values: &[f64], policy: &FitPolicy) -> Result<()> {
    if abscissae.len() != values.len() {
        return Err(Error::Fit("abscissae and values differ in length".into()));
    }
    if abscissae.len() < policy.min_samples {
        return Err(Error::Fit(format!(
            "need at least {} samples, got {}",
            policy.min_samples,
            abscissae.len()
        )));
    }
    if abscissae.iter().chain(values).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Fit("samples must be positive and finite".into()));
    }
    let lo = abscissae.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = abscissae.iter().cloned().fold(0.0, f64::max);
    let decades = (hi / lo).log10();
    if decades < policy.min_decades - 1e-12 {
        return Err(Error::Fit(format!(
            "abscissae span {decades:.3} decades, need {}",
            policy.min_decades
        )));
    }
    Ok(())
}

fn least_squares(columns: &[&Vec<f64>], y: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = y.len();
    let k = columns.len();
    let a = DMatrix::from_fn(n, k, |i, j| columns[j][i]);
    let b = DVector::from_column_slice(y);
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smax == 0.0 || smin / smax < 1e-10 {
        return Err(Error::Fit("rank-deficient design".into()));
    }
    let x = svd.solve(&b, 1e-14 * smax).map_err(|e| Error::Fit(e.to_string()))?;
    let r = &a * &x - b;
    let residual = (r.norm_squared() / n as f64).sqrt();
    Ok((x.iter().cloned().collect(), residual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lippmann_schwinger::OperatorKernel;

    fn line_grid(n: usize) -> (Vec<crate::Point>, Vec<f64>) {
        let pts = (0..n).map(|i| [i as f64 / n as f64, 0.0, 0.0]).collect();
        (pts, vec![1.0 / n as f64; n])
    }

    fn rank_one(n: usize) -> (OperatorKernel, f64, f64, f64, f64) {
        let (g, w) = line_grid(n);
        let f: Vec<f64> = g.iter().map(|p| 1.0 + p[0]).collect();
        let h: Vec<f64> = g.iter().map(|p| (3.0 * p[0]).cos()).collect();
        let values = DMatrix::from_fn(n, n, |i, j| Complex64::new(f[i] * h[j], 0.0));
        let k = OperatorKernel::new(g.clone(), g, values, w.clone(), w.clone()).unwrap();
        let nf = f.iter().zip(&w).map(|(a, b)| a * a * b).sum::<f64>().sqrt();
        let nh = h.iter().zip(&w).map(|(a, b)| a * a * b).sum::<f64>().sqrt();
        let mf = f.iter().cloned().fold(0.0, |m: f64, x| m.max(x.abs()));
        let mh = h.iter().cloned().fold(0.0, |m: f64, x| m.max(x.abs()));
        (k, nf, nh, mf, mh)
    }

    #[test]
    fn rank_one_norms() {
        let (k, nf, nh, mf, mh) = rank_one(40);
        assert!((kernel_sup_norm(&k) - mf * mh).abs() < 1e-14);
        assert!((l2_operator_norm(&k).unwrap() - nf * nh).abs() < 1e-12);
        let p2 = LebesgueExponent::new(2.0).unwrap();
        assert!(test_pair_lower_bound(&k, &p2, 4) >= 0.8 * nf * nh);
    }

    #[test]
    fn power_iteration_agrees_with_dense() {
        let n = 200;
        let (g, w) = line_grid(n);
        let values = DMatrix::from_fn(n, n, |i, j| {
            let d = (i as f64 - j as f64) / n as f64;
            Complex64::from_polar((-d * d * 20.0).exp(), 5.0 * d.abs())
        });
        let k = OperatorKernel::new(g.clone(), g, values, w.clone(), w).unwrap();
        let b = k.scaled_matrix();
        let dense = dense_top_singular_value(&b);
        let (power, _, _) = power_top_singular_value(&b, 1e-10).unwrap();
        assert!((dense - power).abs() < 1e-6 * dense);
        assert!((l2_operator_norm(&k).unwrap() - dense).abs() < 1e-6 * dense);
    }

    #[test]
    fn quadrature_identity_has_unit_norm() {
        let n = 30;
        let (g, w) = line_grid(n);
        let values = DMatrix::from_fn(n, n, |i, j| if i == j { Complex64::new(1.0 / w[i], 0.0) } else { Complex64::new(0.0, 0.0) });
        let k = OperatorKernel::new(g.clone(), g, values, w.clone(), w).unwrap();
        assert!((l2_operator_norm(&k).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_kernel() {
        let (g, w) = line_grid(5);
        let k = OperatorKernel::new(g.clone(), g, DMatrix::zeros(5, 5), w.clone(), w).unwrap();
        assert_eq!(kernel_sup_norm(&k), 0.0);
        assert_eq!(l2_operator_norm(&k).unwrap(), 0.0);
        assert_eq!(test_pair_lower_bound(&k, &LebesgueExponent::new(4.0).unwrap(), 5), 0.0);
    }

    #[test]
    fn interpolation_endpoints_and_log_linearity() {
        let (a, b) = (3.0, 0.2);
        assert_eq!(interpolated_norm(a, b, &LebesgueExponent::new(2.0).unwrap()), a);
        assert_eq!(interpolated_norm(a, b, &LebesgueExponent::infinity()), b);
        let mid = interpolated_norm(a, b, &LebesgueExponent::new(4.0).unwrap());
        assert!((mid.ln() - 0.5 * (a.ln() + b.ln())).abs() < 1e-14);
    }

    #[test]
    fn exact_power_law() {
        let t = [1.0, 2.0, 5.0, 10.0, 20.0];
        let v: Vec<f64> = t.iter().map(|x: &f64| x.powi(-2)).collect();
        let fit = fit_decay(&t, &v, FitModel::PurePower).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn power_log_recovery() {
        let t: Vec<f64> = (0..12).map(|k| 5.0 * 100f64.powf(k as f64 / 11.0)).collect();
        let v: Vec<f64> = t.iter().map(|x| x.powf(-1.5) * (1.0 + x).ln()).collect();
        let fit = fit_decay(&t, &v, FitModel::PowerLog).unwrap();
        assert!((fit.slope + 1.5).abs() < 0.05);
        assert!((fit.log_power - 1.0).abs() < 0.05);
        let c = fit_power_log_constrained(&t, &v, 1.5).unwrap();
        assert!((c.log_power - 1.0).abs() < 1e-10);
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(fit_decay(&[1.0, 10.0, 100.0], &[1.0, 0.1, 0.01], FitModel::PurePower), Err(Error::Fit(_))));
        assert!(matches!(fit_decay(&[1.0, 2.0, 3.0, 4.0], &[1.0; 4], FitModel::PurePower), Err(Error::Fit(_))));
    }
}
