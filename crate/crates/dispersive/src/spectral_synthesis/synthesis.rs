use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::grid::EvaluationGrid;
use super::source::ResolventFactory;
use crate::error::{Error, Result};
use crate::free_resolvent::{ComplexFrequency, CutoffKind, CutoffSpec, LebesgueExponent, Sign, WeightParams};
use crate::lippmann_schwinger::OperatorKernel;
use crate::norm_estimation::{interpolated_norm, kernel_sup_norm, l2_operator_norm};
use crate::quadrature::gauss_legendre;

/// λ-quadrature. The spectral density `T(λ)` is sampled on amplitude panels
/// and interpolated; the phase `e^{itλ}` is integrated on finer sub-panels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaPanels {
    /// Amplitude panel width; `None` selects `6π/(2(reach + potential reach))`,
    /// three oscillations of the fastest path per 16-node panel.
    pub amplitude_width: Option<f64>,
    pub amplitude_order: usize,
    /// Phase sub-panel width; `None` selects `π/(4|t|)`.
    pub phase_width: Option<f64>,
    pub phase_order: usize,
}

impl Default for LambdaPanels {
    fn default() -> Self {
        Self { amplitude_width: None, amplitude_order: 16, phase_width: None, phase_order: 8 }
    }
}

impl LambdaPanels {
    /// Both widths halved.
    pub fn refined(&self, grid: &EvaluationGrid, factory: &ResolventFactory, t: f64) -> Self {
        Self {
            amplitude_width: Some(0.5 * self.amplitude_width_for(grid, factory)),
            phase_width: Some(0.5 * self.phase_width_for(t)),
            ..*self
        }
    }

    pub fn amplitude_width_for(&self, grid: &EvaluationGrid, factory: &ResolventFactory) -> f64 {
        self.amplitude_width.unwrap_or_else(|| {
            let rate = 2.0 * (grid.reach() + factory.potential_reach());
            6.0 * PI / rate.max(1.0)
        })
    }

    pub fn phase_width_for(&self, t: f64) -> f64 {
        self.phase_width.unwrap_or(PI / (4.0 * t.abs().max(1.0)))
    }

    fn check_phase(&self, t: f64) -> Result<()> {
        let limit = PI / (4.0 * t.abs().max(1.0));
        let w = self.phase_width_for(t);
        if !(w > 0.0) || w > limit * (1.0 + 1e-12) {
            return Err(Error::Accuracy(format!("phase panel width {w} exceeds pi/(4|t|) = {limit} at t = {t}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SynthesisSettings {
    /// Imaginary part of the spectral points standing in for `ε → 0`.
    pub epsilon_reg: f64,
    /// Replace `T(ε)` by `2T(ε/2) − T(ε)`.
    pub richardson: bool,
    pub panels: LambdaPanels,
    /// Largest window scale `A` synthesized directly.
    pub max_window: f64,
}

impl Default for SynthesisSettings {
    fn default() -> Self {
        Self { epsilon_reg: 1e-3, richardson: false, panels: LambdaPanels::default(), max_window: 32.0 }
    }
}

/// One `∫ e^{itλ} λ^{1−2α} cutoff(λ) T(λ) dλ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SynthesisJob {
    pub t: f64,
    pub alpha: f64,
    pub cutoff: CutoffSpec,
}

/// `T(λ) = (πi)⁻¹(S⁺ − S⁻) = (2/π) Im S⁺` at the amplitude nodes, where `S`
/// is the unweighted kernel of `R − R₀` on the grid.
#[derive(Debug, Clone)]
pub struct SpectralSamples {
    /// Panel edges.
    pub breaks: Vec<f64>,
    /// Nodes of each panel, in order.
    pub nodes: Vec<f64>,
    pub density: Vec<DMatrix<f64>>,
    pub order: usize,
}

fn check_job(job: &SynthesisJob) -> Result<()> {
    if !(0.0..=1.0).contains(&job.alpha) {
        return Err(Error::domain("alpha", format!("must lie in [0, 1], got {}", job.alpha)));
    }
    if !job.t.is_finite() {
        return Err(Error::domain("t", "must be finite"));
    }
    if job.cutoff.support().1.is_infinite() {
        return Err(Error::domain("cutoff.kind", "synthesis needs a compactly supported cutoff"));
    }
    Ok(())
}

/// Panel edges covering the union of the supports, split at every breakpoint.
fn panel_breaks(jobs: &[SynthesisJob], width: f64) -> Vec<f64> {
    let mut marks: Vec<f64> = Vec::new();
    for j in jobs {
        let (lo, hi) = j.cutoff.support();
        marks.push(lo);
        marks.push(hi);
        marks.extend(j.cutoff.breakpoints().into_iter().filter(|b| *b >= lo && *b <= hi));
    }
    marks.sort_by(f64::total_cmp);
    marks.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
    let mut out = vec![marks[0]];
    for pair in marks.windows(2) {
        let n = ((pair[1] - pair[0]) / width).ceil().max(1.0) as usize;
        for i in 1..=n {
            out.push(pair[0] + (pair[1] - pair[0]) * i as f64 / n as f64);
        }
    }
    out
}

fn density_at(factory: &ResolventFactory, grid: &EvaluationGrid, lambda: f64, settings: &SynthesisSettings) -> Result<DMatrix<f64>> {
    let at = |eps: f64| -> Result<DMatrix<f64>> {
        let f = ComplexFrequency::new(lambda, eps, Sign::Plus)?;
        let h = factory.solve(&f)?;
        let s = h.scattered_kernel(&grid.points, &grid.points, 0)?;
        Ok(s.map(|z| 2.0 / PI * z.im))
    };
    let eps = settings.epsilon_reg;
    if settings.richardson {
        Ok(at(0.5 * eps)? * 2.0 - at(eps)?)
    } else {
        at(eps)
    }
}

/// Samples `T(λ)` at every amplitude node needed by `jobs`.
pub fn sample_density(
    jobs: &[SynthesisJob],
    grid: &EvaluationGrid,
    factory: &ResolventFactory,
    settings: &SynthesisSettings,
) -> Result<SpectralSamples> {
    if jobs.is_empty() {
        return Err(Error::Usage("no synthesis jobs".into()));
    }
    for j in jobs {
        check_job(j)?;
    }
    let order = settings.panels.amplitude_order.max(2);
    let breaks = panel_breaks(jobs, settings.panels.amplitude_width_for(grid, factory));
    let mut nodes = Vec::with_capacity(order * (breaks.len() - 1));
    for p in breaks.windows(2) {
        nodes.extend(gauss_legendre(order, p[0], p[1]).nodes);
    }
    let density = if factory.potential.is_zero() {
        vec![DMatrix::zeros(grid.len(), grid.len()); nodes.len()]
    } else {
        nodes
            .par_iter()
            .map(|&l| density_at(factory, grid, l, settings))
            .collect::<Result<Vec<_>>>()?
    };
    Ok(SpectralSamples { breaks, nodes, density, order })
}

/// Barycentric weights of the reference Gauss–Legendre nodes.
fn barycentric(nodes: &[f64]) -> Vec<f64> {
    (0..nodes.len())
        .map(|q| 1.0 / (0..nodes.len()).filter(|&j| j != q).map(|j| nodes[q] - nodes[j]).product::<f64>())
        .collect()
}

fn lagrange_row(nodes: &[f64], bary: &[f64], x: f64, out: &mut [f64]) {
    if let Some(q) = nodes.iter().position(|&n| n == x) {
        out.iter_mut().for_each(|v| *v = 0.0);
        out[q] = 1.0;
        return;
    }
    let mut den = 0.0;
    for q in 0..nodes.len() {
        out[q] = bary[q] / (x - nodes[q]);
        den += out[q];
    }
    out.iter_mut().for_each(|v| *v /= den);
}

/// Unweighted `Φ = ∫ e^{itλ} λ^{1−2α} cutoff(λ) T(λ) dλ` from the samples.
pub fn synthesize_from(samples: &SpectralSamples, job: &SynthesisJob, panels: &LambdaPanels) -> Result<DMatrix<Complex64>> {
    check_job(job)?;
    panels.check_phase(job.t)?;
    let n = samples.density.first().map(|d| d.nrows()).unwrap_or(0);
    let order = samples.order;
    let reference = gauss_legendre(order, -1.0, 1.0).nodes;
    let bary = barycentric(&reference);
    let sub = gauss_legendre(panels.phase_order.max(2), -1.0, 1.0);
    let beta = 1.0 - 2.0 * job.alpha;
    let (lo, hi) = job.cutoff.support();
    let (first, last) = (samples.breaks[0], samples.breaks[samples.breaks.len() - 1]);
    if lo < first * (1.0 - 1e-12) || hi > last * (1.0 + 1e-12) {
        return Err(Error::Usage(format!("samples cover [{first}, {last}], job needs [{lo}, {hi}]")));
    }
    let mut total = DMatrix::<Complex64>::zeros(n, n);
    let mut basis = vec![0.0; order];
    for (p, edge) in samples.breaks.windows(2).enumerate() {
        let (a, b) = (edge[0], edge[1]);
        if b <= lo || a >= hi {
            continue;
        }
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let pieces = ((b - a) / panels.phase_width_for(job.t)).ceil().max(2.0) as usize;
        let h = (b - a) / pieces as f64;
        let mut moments = vec![Complex64::new(0.0, 0.0); order];
        for s in 0..pieces {
            let c0 = a + (s as f64 + 0.5) * h;
            for (x, w) in sub.nodes.iter().zip(&sub.weights) {
                let lam = c0 + 0.5 * h * x;
                let g = job.cutoff.eval(lam);
                if g == 0.0 {
                    continue;
                }
                let amp = 0.5 * h * w * g * lam.powf(beta);
                let phase = Complex64::from_polar(amp, job.t * lam);
                lagrange_row(&reference, &bary, (lam - mid) / half, &mut basis);
                for q in 0..order {
                    moments[q] += phase * basis[q];
                }
            }
        }
        let mut part = DMatrix::<Complex64>::zeros(n, n);
        for q in 0..order {
            let d = &samples.density[p * order + q];
            let m = moments[q];
            part.zip_apply(d, |z, v| *z += m * v);
        }
        total += part;
    }
    Ok(total)
}

/// Unweighted kernels of all jobs from one shared sweep of `T(λ)`.
pub fn synthesize(
    jobs: &[SynthesisJob],
    grid: &EvaluationGrid,
    factory: &ResolventFactory,
    settings: &SynthesisSettings,
) -> Result<Vec<DMatrix<Complex64>>> {
    for j in jobs {
        settings.panels.check_phase(j.t)?;
    }
    let samples = sample_density(jobs, grid, factory, settings)?;
    jobs.iter().map(|j| synthesize_from(&samples, j, &settings.panels)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PropagatorRequest {
    pub t: f64,
    pub exponent: LebesgueExponent,
    pub weights: WeightParams,
    pub cutoff: CutoffSpec,
    pub lambda_panels: LambdaPanels,
}

/// `⟨x⟩^{−σα} Φ_{A,α}(t) ⟨y⟩^{−σα}` sampled on the grid.
pub fn propagator_difference(
    req: &PropagatorRequest,
    grid: &EvaluationGrid,
    factory: &ResolventFactory,
    settings: &SynthesisSettings,
) -> Result<OperatorKernel> {
    if req.cutoff.kind != CutoffKind::PsiAA {
        return Err(Error::domain("cutoff.kind", "propagator difference uses the psi_aA cutoff"));
    }
    if !(req.t.abs() >= 1.0) {
        return Err(Error::domain("t", format!("|t| must be at least 1, got {}", req.t)));
    }
    grid.check_reach(factory.r_trunc())?;
    let s = SynthesisSettings { panels: req.lambda_panels, ..*settings };
    let alpha = req.exponent.alpha;
    let job = SynthesisJob { t: req.t, alpha, cutoff: req.cutoff };
    let phi = synthesize(&[job], grid, factory, &s)?.pop().expect("one job");
    grid.with_weight_exponent(req.weights.sigma * alpha).weighted_kernel(&phi)
}

/// Endpoint norms of the window operator `F_{A,α}(t)`, from `φ(√G/A) − φ(√G₀/A)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowNorm {
    #[serde(rename = "A")]
    pub big_a: f64,
    pub t: f64,
    /// L²→L² norm of the `α = 0` operator.
    pub norm_2_2: f64,
    /// Kernel sup of the `α = 1` operator with weights `⟨x⟩^{−σ}`.
    pub norm_1_inf: f64,
    pub norm_p_interp: f64,
    pub p: LebesgueExponent,
}

pub fn window_cutoff(big_a: f64) -> Result<CutoffSpec> {
    CutoffSpec::new(CutoffKind::PhiWindow, 0.5 * big_a, big_a)
}

/// Interpolated norm estimate of `F_{A,α}(t)`.
pub fn frequency_window_norm(
    big_a: f64,
    t: f64,
    exponent: &LebesgueExponent,
    weights: &WeightParams,
    grid: &EvaluationGrid,
    factory: &ResolventFactory,
    settings: &SynthesisSettings,
) -> Result<WindowNorm> {
    Ok(frequency_window_norms(&[(big_a, t)], exponent, weights, grid, factory, settings)?[0])
}

/// Jobs behind [`frequency_window_norms`]: `α = 0` then `α = 1` per window.
pub fn window_jobs(windows: &[(f64, f64)], settings: &SynthesisSettings) -> Result<Vec<SynthesisJob>> {
    let mut jobs = Vec::with_capacity(2 * windows.len());
    for &(big_a, t) in windows {
        if !(big_a > 0.0) {
            return Err(Error::domain("A", "must be positive"));
        }
        if big_a > settings.max_window {
            return Err(Error::Budget(format!("window A = {big_a} exceeds the cap {}", settings.max_window)));
        }
        let cutoff = window_cutoff(big_a)?;
        jobs.push(SynthesisJob { t, alpha: 0.0, cutoff });
        jobs.push(SynthesisJob { t, alpha: 1.0, cutoff });
    }
    Ok(jobs)
}

/// Several `(A, t)` windows sharing one sweep of `T(λ)`.
pub fn frequency_window_norms(
    windows: &[(f64, f64)],
    exponent: &LebesgueExponent,
    weights: &WeightParams,
    grid: &EvaluationGrid,
    factory: &ResolventFactory,
    settings: &SynthesisSettings,
) -> Result<Vec<WindowNorm>> {
    let jobs = window_jobs(windows, settings)?;
    for j in &jobs {
        settings.panels.check_phase(j.t)?;
    }
    let samples = sample_density(&jobs, grid, factory, settings)?;
    window_norms_from_samples(&samples, windows, exponent, weights, grid, settings)
}

/// [`frequency_window_norms`] on an existing sweep of `T(λ)`.
pub fn window_norms_from_samples(
    samples: &SpectralSamples,
    windows: &[(f64, f64)],
    exponent: &LebesgueExponent,
    weights: &WeightParams,
    grid: &EvaluationGrid,
    settings: &SynthesisSettings,
) -> Result<Vec<WindowNorm>> {
    let jobs = window_jobs(windows, settings)?;
    let plain = grid.with_weight_exponent(0.0);
    let weighted = grid.with_weight_exponent(weights.sigma);
    windows
        .iter()
        .zip(jobs.chunks(2))
        .map(|(&(big_a, t), pair)| {
            let k0 = synthesize_from(samples, &pair[0], &settings.panels)?;
            let k1 = synthesize_from(samples, &pair[1], &settings.panels)?;
            let norm_2_2 = l2_operator_norm(&plain.weighted_kernel(&k0)?)?;
            let norm_1_inf = kernel_sup_norm(&weighted.weighted_kernel(&k1)?);
            let norm_p_interp = interpolated_norm(norm_2_2, norm_1_inf, exponent);
            Ok(WindowNorm { big_a, t, norm_2_2, norm_1_inf, norm_p_interp, p: *exponent })
        })
        .collect()
}
