//! Regularity of the spectral density and the frequency-window pieces.

use dispersive::free_resolvent::{ComplexFrequency, Sign};
use dispersive::norm_estimation::{fit_decay, fit_decay_with, kernel_sup_norm, FitModel, FitPolicy};
use dispersive::spectral_synthesis::{frequency_window_norms, holder_exponent_with, t_derivative, SynthesisSettings};

use super::{factory, lib, shell_grid};
use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::plot::{Plot, PlotSeries};
use crate::report::{Check, Column, Outcome, Relation, Table};

/// Fits over three points spanning less than a decade, as the window sweeps do.
pub const SHORT_SWEEP: FitPolicy = FitPolicy { min_samples: 3, min_decades: 0.5 };

/// Uniform bounds on `∂^j T(λ)` for `j ≤ j₀ + 1` and the Hölder exponent of
/// the top derivative.
pub fn holder(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let est = cfg.experiment.estimates();
    let w = cfg.weights;
    let fac = factory(cfg, cfg.num("r_max"))?;
    let grid = shell_grid(cfg)?;
    let eps = cfg.num("epsilon");
    let mut table = Table::new(
        Column::new("sweep_point", "gap for holder, lambda for derivative series"),
        vec![Column::new("norm_sup", "weighted L1->Linf")],
    );
    let mut out_checks = Vec::new();
    let mut plot_series = Vec::new();
    let mut fits = Vec::new();

    let lambdas = cfg.sweep("lambda");
    let bound_tol = cfg.tol("bound_slope");
    let mut per_order: Vec<Vec<f64>> = vec![Vec::new(); w.j0 as usize + 2];
    for &l in lambdas {
        let f = ComplexFrequency::new(l, eps, Sign::Plus).map_err(lib(cfg))?;
        let h = fac.solve(&f).map_err(lib(cfg))?;
        for j in 0..=w.j0 + 1 {
            let k = t_derivative(j, &f, &w, 1.0, &grid, h.as_ref()).map_err(lib(cfg))?;
            per_order[j as usize].push(kernel_sup_norm(&k));
        }
    }
    for (j, vals) in per_order.iter().enumerate() {
        let name = format!("derivative_j{j}");
        for (&l, &v) in lambdas.iter().zip(vals) {
            table.push(&name, l, vec![v]);
        }
        if vals.iter().all(|&v| v == 0.0) {
            out_checks.push(
                Check::new(&format!("{name}_bounded"), est[0], f64::NEG_INFINITY, Relation::AtMost, bound_tol, bound_tol)
                    .with_detail("identically zero"),
            );
            continue;
        }
        let fit = fit_decay(lambdas, vals, FitModel::PurePower).map_err(lib(cfg))?;
        out_checks.push(
            Check::new(&format!("{name}_bounded"), est[0], fit.slope, Relation::AtMost, bound_tol, bound_tol)
                .with_detail("lambda-slope of the sup norm; a bounded family has slope <= 0"),
        );
        fits.push((name, est[0], fit));
    }

    let gaps = cfg.sweep("gap");
    let rep = holder_exponent_with(&w, cfg.num("lambda0"), &grid, &fac, gaps, eps).map_err(lib(cfg))?;
    for (&g, &n) in rep.gaps.iter().zip(&rep.norms) {
        table.push("holder", g, vec![n]);
    }
    let tol = cfg.tol("slope");
    let target = w.sigma_prime;
    match &rep.fit {
        Some(fit) => {
            out_checks.push(
                Check::new("holder_slope", est[1], fit.slope, Relation::AtLeast, target - tol, tol)
                    .with_detail(format!("order j0 + 1 = {}, sigma' = {target}", rep.order)),
            );
            plot_series.push(PlotSeries::from_fit("holder differences", fit));
            fits.push(("holder".into(), est[1], fit.clone()));
        }
        None => out_checks.push(
            Check::new("holder_slope", est[1], f64::INFINITY, Relation::AtLeast, target - tol, tol)
                .with_detail("inconclusive: every difference at the noise floor"),
        ),
    }
    let mut out = Outcome::new(table);
    out.checks = out_checks;
    for (name, e, fit) in fits {
        out.fit(&name, e, fit);
    }
    out.plot = Some(Plot {
        title: format!("Hoelder differences of the spectral density at lambda0 = {}", rep.lambda0),
        x_label: "gap".into(),
        y_label: "weighted kernel sup".into(),
        series: plot_series,
    });
    Ok(out)
}

/// Interpolated norms of `F_{A,α}(t)` over `A` at fixed `t` and over `t` at fixed `A`.
pub fn window(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let est = cfg.experiment.estimates()[0];
    let fac = factory(cfg, cfg.num("r_max"))?;
    let grid = shell_grid(cfg)?;
    grid.check_reach(fac.r_trunc()).map_err(lib(cfg))?;
    let settings = SynthesisSettings { epsilon_reg: cfg.num("epsilon_reg"), ..SynthesisSettings::default() };
    let (t0, a0) = (cfg.num("fixed_t"), cfg.num("fixed_A"));
    let a_sweep: Vec<(f64, f64)> = cfg.sweep("A").iter().map(|&a| (a, t0)).collect();
    let t_sweep: Vec<(f64, f64)> = cfg.sweep("t").iter().map(|&t| (a0, t)).collect();
    let mut windows = a_sweep.clone();
    for w in &t_sweep {
        if !windows.contains(w) {
            windows.push(*w);
        }
    }
    let norms = frequency_window_norms(&windows, &cfg.exponent, &cfg.weights, &grid, &fac, &settings).map_err(lib(cfg))?;
    let lookup = |w: &(f64, f64)| norms[windows.iter().position(|x| x == w).expect("window present")];

    let mut table = Table::new(
        Column::new("sweep_point", "A for A_sweep, t for t_sweep"),
        vec![
            Column::new("A", "frequency"),
            Column::new("t", "time"),
            Column::new("norm_l2", "L2->L2"),
            Column::new("norm_sup", "weighted L1->Linf"),
            Column::new("norm_interp_p", "Lp'->Lp bound"),
        ],
    );
    let mut out_series = Vec::new();
    for (name, sweep, by_a) in [("A_sweep", &a_sweep, true), ("t_sweep", &t_sweep, false)] {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for w in sweep.iter() {
            let n = lookup(w);
            let x = if by_a { n.big_a } else { n.t };
            table.push(name, x, vec![n.big_a, n.t, n.norm_2_2, n.norm_1_inf, n.norm_p_interp]);
            xs.push(x);
            ys.push(n.norm_p_interp);
        }
        out_series.push((name, xs, ys));
    }
    let mut out = Outcome::new(table);
    let two_p = 2.0 / cfg.exponent.p;
    let tol = cfg.tol("slope");
    let mut plot_series = Vec::new();
    for (name, xs, ys) in out_series {
        let fit = fit_decay_with(&xs, &ys, FitModel::PurePower, &SHORT_SWEEP).map_err(lib(cfg))?;
        let bound = if name == "A_sweep" { -two_p } else { two_p };
        out.checks.push(
            Check::new(&format!("{name}_slope"), est, fit.slope, Relation::AtMost, bound + tol, tol)
                .with_detail(format!("bound exponent {bound}")),
        );
        plot_series.push(PlotSeries::from_fit(name, &fit));
        out.fit(name, est, fit);
    }
    out.plot = Some(Plot {
        title: format!("frequency windows, p = {}", cfg.exponent.p),
        x_label: "A (A_sweep) or t (t_sweep)".into(),
        y_label: "interpolated norm".into(),
        series: plot_series,
    });
    Ok(out)
}
