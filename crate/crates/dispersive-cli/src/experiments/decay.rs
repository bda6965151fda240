//! Weighted time decay of the perturbed propagator.

use dispersive::norm_estimation::{fit_decay, DecayFit, FitModel};
use dispersive::spectral_synthesis::{
    decay_from_samples, decay_jobs, decomposition_defect, sample_density, DecayExperiment, DecaySettings, SynthesisSettings,
};

use super::{factory, lib, shell_grid};
use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::plot::{Plot, PlotSeries};
use crate::report::{Check, Column, Outcome, Relation, Table};

/// Pure power fit of `v / log(1 + t)^γ`; its slope is `−β` in `t^{−β} log(1+t)^γ`.
pub fn log_corrected_fit(ts: &[f64], values: &[f64], gamma: f64) -> dispersive::Result<DecayFit> {
    let corrected: Vec<f64> = ts.iter().zip(values).map(|(t, v)| v / (1.0 + t).ln().powf(gamma)).collect();
    fit_decay(ts, &corrected, FitModel::PurePower)
}

pub(crate) fn decay_settings(cfg: &ExperimentConfig) -> (DecaySettings, SynthesisSettings) {
    let decay = DecaySettings {
        t_list: cfg.sweep("t").to_vec(),
        a: cfg.cutoff.a,
        a_rule_power: cfg.num("a_rule_power"),
        window_t: cfg.num("window_t"),
        window_scales: cfg.sweep("window_A").to_vec(),
    };
    let settings = SynthesisSettings {
        epsilon_reg: cfg.num("epsilon_reg"),
        max_window: cfg.num("max_window"),
        ..SynthesisSettings::default()
    };
    (decay, settings)
}

/// One sweep of the spectral density serves every σ of the config.
pub fn perturbed_decay(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let est = cfg.experiment.estimates();
    let fac = factory(cfg, cfg.num("r_max"))?;
    let grid = shell_grid(cfg)?;
    grid.check_reach(fac.r_trunc()).map_err(lib(cfg))?;
    let (decay, settings) = decay_settings(cfg);
    let jobs = decay_jobs(&decay, &settings).map_err(lib(cfg))?;
    let samples = sample_density(&jobs, &grid, &fac, &settings).map_err(lib(cfg))?;
    let p = cfg.exponent;
    let delta0 = cfg.potential.delta0;
    let runs: Vec<DecayExperiment> = cfg
        .sweep("sigma")
        .iter()
        .map(|&sigma| decay_from_samples(sigma, &p, &samples, &grid, &decay, &settings))
        .collect::<Result<_, _>>()
        .map_err(lib(cfg))?;

    let mut table = Table::new(
        Column::new("t", "time"),
        vec![
            Column::new("A_rule", "frequency"),
            Column::new("A_used", "frequency"),
            Column::new("free_sup", "weighted L1->Linf"),
            Column::new("phi_sup", "weighted L1->Linf"),
            Column::new("phi_l2", "L2->L2"),
            Column::new("norm_sup", "weighted L1->Linf"),
            Column::new("free_interp_p", "Lp'->Lp bound"),
            Column::new("phi_interp_p", "Lp'->Lp bound"),
            Column::new("eta_bound", "Lp'->Lp bound"),
            Column::new("norm_interp_p", "Lp'->Lp bound"),
        ],
    );
    let mut out_checks = Vec::new();
    let mut fits = Vec::new();
    let mut plot_series = Vec::new();
    for run in &runs {
        let sigma = run.sigma;
        let tag = format!("sigma={sigma}");
        for r in &run.rows {
            table.push(
                &tag,
                r.t,
                vec![r.a_rule, r.a_used, r.free_sup, r.phi_sup, r.phi_l2, r.combined_inf, r.free_interp, r.phi_interp, r.eta_bound, r.combined_interp],
            );
        }
        let ts: Vec<f64> = run.rows.iter().map(|r| r.t.abs()).collect();
        let inf: Vec<f64> = run.rows.iter().map(|r| r.combined_inf).collect();
        let interp: Vec<f64> = run.rows.iter().map(|r| r.combined_interp).collect();
        let alpha = p.alpha;
        if sigma < delta0 {
            let endpoint = log_corrected_fit(&ts, &inf, 1.0).map_err(lib(cfg))?;
            let tol = cfg.tol("endpoint");
            out_checks.push(
                Check::new(&format!("endpoint_beta({tag})"), est[0], -endpoint.slope, Relation::AtLeast, 1.0 + sigma - tol, tol)
                    .with_detail("beta of t^-beta log(1+t) at the L1->Linf endpoint"),
            );
            let interp_fit = log_corrected_fit(&ts, &interp, alpha).map_err(lib(cfg))?;
            let tol = cfg.tol("interpolated");
            out_checks.push(
                Check::new(&format!("interpolated_rate({tag})"), est[0], -interp_fit.slope, Relation::AtLeast, alpha * (1.0 + sigma) - tol, tol)
                    .with_detail(format!("decay rate of (t^-(1+sigma) log(1+t))^alpha model at p = {}", p.p)),
            );
            plot_series.push(PlotSeries::from_fit(&format!("endpoint {tag}"), &run.endpoint_log));
            fits.push((format!("endpoint_log_corrected({tag})"), est[0], endpoint));
            fits.push((format!("interpolated_log_corrected({tag})"), est[0], interp_fit));
        } else {
            let tol = cfg.tol("limited");
            out_checks.push(
                Check::new(&format!("endpoint_beta({tag})"), est[1], -run.endpoint_power.slope, Relation::AtLeast, 1.0 + delta0 - tol, tol)
                    .with_detail("pure power rate at the L1->Linf endpoint, limited by delta0"),
            );
            let tol = cfg.tol("interpolated");
            out_checks.push(
                Check::new(&format!("interpolated_rate({tag})"), est[1], -run.interp_power.slope, Relation::AtLeast, alpha * (1.0 + delta0) - tol, tol)
                    .with_detail(format!("pure power rate at p = {}", p.p)),
            );
            plot_series.push(PlotSeries::from_fit(&format!("endpoint {tag}"), &run.endpoint_power));
        }
        plot_series.push(PlotSeries::from_fit(&format!("interpolated {tag}"), &run.interp_power));
        fits.push((format!("endpoint_power({tag})"), est[0], run.endpoint_power.clone()));
        fits.push((format!("endpoint_power_log({tag})"), est[0], run.endpoint_log.clone()));
        fits.push((format!("interpolated_power({tag})"), est[0], run.interp_power.clone()));
        fits.push((format!("interpolated_power_log({tag})"), est[0], run.interp_log.clone()));
    }
    let tol = cfg.tol("decomposition");
    let mut worst: f64 = 0.0;
    for r in &runs[0].rows {
        worst = worst.max(decomposition_defect(decay.a, r.a_used, 2000).map_err(lib(cfg))?);
    }
    out_checks.push(
        Check::new("cutoff_decomposition", est[2], worst, Relation::AtMost, tol, tol)
            .with_detail("max |psi + eta - chi| with eta integrated from its window"),
    );
    let mut out = Outcome::new(table);
    out.checks = out_checks;
    for (name, e, fit) in fits {
        out.fit(&name, e, fit);
    }
    out.notes.push(format!(
        "window constant C' per sigma: {}",
        runs.iter().map(|r| format!("{}: {:e}", r.sigma, r.window_constant)).collect::<Vec<_>>().join(", ")
    ));
    out.notes.push(format!(
        "psi is synthesized up to A_used = min((|t| + 1)^{}, {}); the band above is carried by eta_bound",
        decay.a_rule_power, settings.max_window
    ));
    out.plot = Some(Plot {
        title: format!("perturbed weighted decay, p = {}", p.p),
        x_label: "t".into(),
        y_label: "norm".into(),
        series: plot_series,
    });
    Ok(out)
}
