use serde::Serialize;

use super::grid::EvaluationGrid;
use super::source::ResolventFactory;
use super::synthesis::{sample_density, synthesize_from, window_cutoff, SpectralSamples, SynthesisJob, SynthesisSettings};
use crate::error::{Error, Result};
use crate::free_resolvent::{propagator_radial, CutoffKind, CutoffSpec, LebesgueExponent, OscillatoryQuadrature, WeightParams};
use crate::norm_estimation::{
    fit_decay, fit_power_log_constrained, interpolated_norm, kernel_sup_norm, l2_operator_norm, DecayFit, FitModel,
};
use crate::quadrature::composite;
use crate::bracket;

/// Radii sampled by [`free_reference_sup`] per unit of `|t|`.
pub const FREE_SAMPLES: usize = 64;

/// `sup_{x,y} ⟨x⟩^{−σα}⟨y⟩^{−σα} |K(x, y; t)|` of the free propagator kernel.
///
/// For `|x − y| = r` the weights are largest at `x = −y`, so the sup reduces
/// to `⟨r/2⟩^{−2σα}|K(r; t)|` over `r`. Samples sit at `(j + ½)|t|/N` on
/// `(0, 2|t|)`, at a fixed relative distance from the wavefront `r = |t|`,
/// where the `α = 1` kernel is logarithmically singular.
pub fn free_reference_sup(t: f64, alpha: f64, sigma: f64, cutoff: &CutoffSpec) -> Result<f64> {
    if t == 0.0 {
        return Err(Error::domain("t", "must be nonzero"));
    }
    let quad = OscillatoryQuadrature::default();
    let n = FREE_SAMPLES;
    let mut best: f64 = 0.0;
    for j in 0..2 * n {
        let r = (j as f64 + 0.5) * t.abs() / n as f64;
        let k = propagator_radial(r, t, alpha, cutoff, &quad)?.norm();
        best = best.max(bracket(0.5 * r).powf(-2.0 * sigma * alpha) * k);
    }
    Ok(best)
}

/// `max_ρ |ψ_{a,A}(ρ) + η_A(ρ) − χ_a(ρ)|` over `count` points of `[0, 2A]`,
/// with `η_A` integrated from its unit window rather than taken in closed form.
pub fn decomposition_defect(a: f64, big_a: f64, count: usize) -> Result<f64> {
    let psi = CutoffSpec::new(CutoffKind::PsiAA, a, big_a)?;
    let chi = CutoffSpec::chi(a)?;
    let mut worst: f64 = 0.0;
    for i in 0..=count {
        let rho = 2.0 * big_a * i as f64 / count as f64;
        // η_A(ρ) = A⁻¹∫₀^ρ φ₀(τ/A) dτ = ∫₀^{ρ/A} φ₀
        let top = (rho / big_a).min(1.0);
        let eta = if top <= 0.5 { 0.0 } else { composite(0.5, top, 0.05, 8).integrate(|u| psi.unit_window(u)) };
        worst = worst.max((psi.eval(rho) + eta - chi.eval(rho)).abs());
    }
    Ok(worst)
}

/// Knobs of [`full_decay_experiment`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecaySettings {
    pub t_list: Vec<f64>,
    /// Low-frequency cutoff `a`.
    pub a: f64,
    /// `k` in `A = (|t| + 1)^k`.
    pub a_rule_power: f64,
    /// Time at which the window constant `C′` is measured.
    pub window_t: f64,
    pub window_scales: Vec<f64>,
}

impl Default for DecaySettings {
    fn default() -> Self {
        Self {
            t_list: vec![5.0, 7.0, 10.0, 14.0, 20.0, 28.0, 40.0, 56.0, 80.0, 100.0],
            a: 1.0,
            a_rule_power: 4.0,
            window_t: 4.0,
            window_scales: vec![8.0, 16.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayRow {
    pub t: f64,
    /// `A` from the rule.
    pub a_rule: f64,
    /// `A` actually synthesized, capped by the window budget.
    pub a_used: f64,
    pub free_sup: f64,
    pub phi_sup: f64,
    pub phi_l2: f64,
    /// `α = 1` endpoint: free reference plus `Φ`.
    pub combined_inf: f64,
    pub free_interp: f64,
    pub phi_interp: f64,
    /// `C′|t|^{2/p} A^{−2/p}` at `A = a_rule`.
    pub eta_bound: f64,
    pub combined_interp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayExperiment {
    pub sigma: f64,
    pub p: LebesgueExponent,
    pub rows: Vec<DecayRow>,
    pub window_constant: f64,
    /// Fits of the `α = 1` endpoint.
    pub endpoint_power: DecayFit,
    /// Power-log fit, with the constrained fit at `β = 1 + σ` attached.
    pub endpoint_log: DecayFit,
    pub interp_power: DecayFit,
    pub interp_log: DecayFit,
}

/// Synthesis jobs needed by [`full_decay_experiment`]: for each `t` the
/// `α = 0` and `α = 1` operators with `ψ_{a,A}`, then the windows at `window_t`.
pub fn decay_jobs(decay: &DecaySettings, settings: &SynthesisSettings) -> Result<Vec<SynthesisJob>> {
    if decay.t_list.iter().any(|&t| !(t.abs() >= 1.0)) {
        return Err(Error::domain("t_list", "all |t| must be at least 1"));
    }
    let cap = settings.max_window;
    let mut jobs = Vec::new();
    for &t in &decay.t_list {
        let a_used = (t.abs() + 1.0).powf(decay.a_rule_power).min(cap);
        let cutoff = CutoffSpec::new(CutoffKind::PsiAA, decay.a, a_used)?;
        jobs.push(SynthesisJob { t, alpha: 0.0, cutoff });
        jobs.push(SynthesisJob { t, alpha: 1.0, cutoff });
    }
    for &w in &decay.window_scales {
        if 2.0 * w > cap {
            return Err(Error::Budget(format!("window A = {w} reaches past the cap {cap}")));
        }
        let cutoff = window_cutoff(w)?;
        jobs.push(SynthesisJob { t: decay.window_t, alpha: 0.0, cutoff });
        jobs.push(SynthesisJob { t: decay.window_t, alpha: 1.0, cutoff });
    }
    Ok(jobs)
}

/// Weighted decay of the perturbed propagator at the `α = 1` endpoint and the
/// interpolated bound at `p`, from `χ_a = ψ_{a,A} + η_A`.
pub fn full_decay_experiment(
    sigma: f64,
    p: &LebesgueExponent,
    factory: &ResolventFactory,
    grid: &EvaluationGrid,
    decay: &DecaySettings,
    settings: &SynthesisSettings,
) -> Result<DecayExperiment> {
    check_decay_inputs(sigma, p)?;
    grid.check_reach(factory.r_trunc())?;
    let samples = sample_density(&decay_jobs(decay, settings)?, grid, factory, settings)?;
    decay_from_samples(sigma, p, &samples, grid, decay, settings)
}

fn check_decay_inputs(sigma: f64, p: &LebesgueExponent) -> Result<()> {
    if !(sigma > 0.0) {
        return Err(Error::domain("sigma", "must be positive"));
    }
    if !(p.p > 2.0 && p.p.is_finite()) {
        return Err(Error::domain("p", "must lie in (2, inf)"));
    }
    WeightParams::new(sigma, 0.0, 1.0)?;
    Ok(())
}

/// [`full_decay_experiment`] on a sweep of `T(λ)` covering [`decay_jobs`].
pub fn decay_from_samples(
    sigma: f64,
    p: &LebesgueExponent,
    samples: &SpectralSamples,
    grid: &EvaluationGrid,
    decay: &DecaySettings,
    settings: &SynthesisSettings,
) -> Result<DecayExperiment> {
    check_decay_inputs(sigma, p)?;
    let jobs = decay_jobs(decay, settings)?;
    let window_start = 2 * decay.t_list.len();
    let plain = grid.with_weight_exponent(0.0);
    let weighted = grid.with_weight_exponent(sigma);
    let endpoints = |i: usize| -> Result<(f64, f64)> {
        let k0 = synthesize_from(&samples, &jobs[i], &settings.panels)?;
        let k1 = synthesize_from(&samples, &jobs[i + 1], &settings.panels)?;
        Ok((l2_operator_norm(&plain.weighted_kernel(&k0)?)?, kernel_sup_norm(&weighted.weighted_kernel(&k1)?)))
    };
    let two_p = 2.0 / p.p;
    let mut window_constant: f64 = 0.0;
    for (i, &w) in decay.window_scales.iter().enumerate() {
        let (n22, n1) = endpoints(window_start + 2 * i)?;
        let model = decay.window_t.abs().powf(two_p) * w.powf(-two_p);
        window_constant = window_constant.max(interpolated_norm(n22, n1, p) / model);
    }
    let mut rows = Vec::with_capacity(decay.t_list.len());
    for (n, &t) in decay.t_list.iter().enumerate() {
        let a_rule = (t.abs() + 1.0).powf(decay.a_rule_power);
        let a_used = jobs[2 * n].cutoff.big_a;
        let (phi_l2, phi_sup) = endpoints(2 * n)?;
        let free_sup = free_reference_sup(t, 1.0, sigma, &CutoffSpec::chi(decay.a)?)?;
        // the free L² endpoint is sup|χ_a| = 1
        let free_interp = interpolated_norm(1.0, free_sup, p);
        let phi_interp = interpolated_norm(phi_l2, phi_sup, p);
        let eta_bound = window_constant * t.abs().powf(two_p) * a_rule.powf(-two_p);
        rows.push(DecayRow {
            t,
            a_rule,
            a_used,
            free_sup,
            phi_sup,
            phi_l2,
            combined_inf: free_sup + phi_sup,
            free_interp,
            phi_interp,
            eta_bound,
            combined_interp: free_interp + phi_interp + eta_bound,
        });
    }
    let ts: Vec<f64> = rows.iter().map(|r| r.t.abs()).collect();
    let inf: Vec<f64> = rows.iter().map(|r| r.combined_inf).collect();
    let interp: Vec<f64> = rows.iter().map(|r| r.combined_interp).collect();
    let endpoint_power = fit_decay(&ts, &inf, FitModel::PurePower)?;
    let mut endpoint_log = fit_decay(&ts, &inf, FitModel::PowerLog)?;
    endpoint_log.constrained = Some(fit_power_log_constrained(&ts, &inf, 1.0 + sigma)?);
    let interp_power = fit_decay(&ts, &interp, FitModel::PurePower)?;
    let mut interp_log = fit_decay(&ts, &interp, FitModel::PowerLog)?;
    interp_log.constrained = Some(fit_power_log_constrained(&ts, &interp, p.alpha * (1.0 + sigma))?);
    Ok(DecayExperiment {
        sigma,
        p: *p,
        rows,
        window_constant,
        endpoint_power,
        endpoint_log,
        interp_power,
        interp_log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decomposition_identity_holds() {
        for &(a, big_a) in &[(1.0, 4.0), (0.5, 9.0), (2.0, 32.0)] {
            let d = decomposition_defect(a, big_a, 4000).unwrap();
            assert!(d < 1e-10, "a={a} A={big_a}: {d}");
        }
    }

    #[test]
    fn free_reference_decays() {
        let chi = CutoffSpec::chi(1.0).unwrap();
        let ts = [5.0, 10.0, 20.0, 40.0, 80.0];
        let v: Vec<f64> = ts.iter().map(|&t| free_reference_sup(t, 1.0, 0.5, &chi).unwrap()).collect();
        let fit = fit_decay(&ts, &v, FitModel::PurePower).unwrap();
        assert!(fit.slope <= -1.3, "{}", fit.slope);
    }

    #[test]
    fn rejects_endpoint_exponents() {
        let f = ResolventFactory::radial(
            crate::lippmann_schwinger::PotentialSpec::zero(),
            crate::lippmann_schwinger::RadialParams { r_max: 6.0, settings: Default::default() },
        )
        .unwrap();
        let g = EvaluationGrid::shells(0.5, 3.0, 4, 0.0).unwrap();
        let r = full_decay_experiment(0.5, &LebesgueExponent::infinity(), &f, &g, &DecaySettings::default(), &SynthesisSettings::default());
        assert!(matches!(r, Err(Error::Domain { .. })));
    }
}
