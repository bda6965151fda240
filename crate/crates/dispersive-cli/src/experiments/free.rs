//! Experiments on the free resolvent and the free propagator.

use dispersive::free_resolvent::{
    appendix_sups, free_kernel, sup_bound_integral_a, sup_bound_integral_b, ComplexFrequency, Sign,
};
use dispersive::norm_estimation::{fit_decay, FitModel};
use dispersive::spectral_synthesis::free_reference_sup;
use dispersive::Point;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::lib;
use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::plot::{Plot, PlotSeries};
use crate::report::{Check, Column, Outcome, Relation, Table};

fn random_point(rng: &mut ChaCha8Rng, half: f64) -> Point {
    [rng.gen_range(-half..half), rng.gen_range(-half..half), rng.gen_range(-half..half)]
}

fn distance(x: &Point, y: &Point) -> f64 {
    ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2)).sqrt()
}

/// `∂_λ^{k+1}` kernels against central differences of the `k`-th, plus the
/// conjugation symmetry between the two branches.
pub fn free_kernels(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let estimate = cfg.experiment.estimates()[0];
    let n = cfg.num("samples") as usize;
    let h = cfg.num("step");
    let (lo, hi) = (cfg.num("lambda_min"), cfg.num("lambda_max"));
    let half = cfg.num("box");
    let min_d = cfg.num("min_distance");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut table = Table::new(
        Column::new("sample", "index"),
        vec![
            Column::new("lambda", "frequency"),
            Column::new("epsilon", "absorption"),
            Column::new("distance", "length"),
            Column::new("rel_err_k0", "relative"),
            Column::new("rel_err_k1", "relative"),
            Column::new("rel_err_k2", "relative"),
            Column::new("conjugation_defect", "relative"),
        ],
    );
    let mut worst_fd: f64 = 0.0;
    let mut worst_conj: f64 = 0.0;
    for i in 0..n {
        let x = random_point(&mut rng, half);
        let mut y = random_point(&mut rng, half);
        while distance(&x, &y) < min_d {
            y = random_point(&mut rng, half);
        }
        let lambda = rng.gen_range(lo..hi);
        let epsilon = rng.gen_range(0.0..=1.0);
        let sign = if rng.gen_bool(0.5) { Sign::Plus } else { Sign::Minus };
        let f = ComplexFrequency::new(lambda, epsilon, sign).map_err(lib(cfg))?;
        let mut row = vec![lambda, epsilon, distance(&x, &y)];
        for k in 0..3 {
            let exact = free_kernel(&x, &y, &f, k + 1).map_err(lib(cfg))?;
            let up = free_kernel(&x, &y, &f.with_lambda(lambda + h), k).map_err(lib(cfg))?;
            let down = free_kernel(&x, &y, &f.with_lambda(lambda - h), k).map_err(lib(cfg))?;
            let fd = (up - down) / (2.0 * h);
            let rel = (fd - exact).norm() / exact.norm();
            worst_fd = worst_fd.max(rel);
            row.push(rel);
        }
        let a = free_kernel(&x, &y, &f, 0).map_err(lib(cfg))?;
        let b = free_kernel(&x, &y, &f.conjugate(), 0).map_err(lib(cfg))?;
        let conj = (b - a.conj()).norm() / a.norm();
        worst_conj = worst_conj.max(conj);
        row.push(conj);
        table.push("random", i as f64, row);
    }
    let mut out = Outcome::new(table);
    let tol = cfg.tol("fd_relative");
    out.checks.push(
        Check::new("derivative_kernels", estimate, worst_fd, Relation::AtMost, tol, tol)
            .with_detail(format!("max relative error over {n} samples, k = 0, 1, 2, step {h}")),
    );
    let tol = cfg.tol("conjugation");
    out.checks.push(Check::new("conjugation", estimate, worst_conj, Relation::AtMost, tol, tol));
    Ok(out)
}

/// ε-slopes of the sup integrals `sup_x A_s(x, ε)` and `sup_x B(x, ε)`.
pub fn bound_integrals(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let eps = cfg.sweep("epsilon");
    let tol = cfg.tol("slope");
    let (est_a, est_b) = (cfg.experiment.estimates()[0], cfg.experiment.estimates()[1]);
    let mut table = Table::new(Column::new("epsilon", "absorption"), vec![Column::new("sup_integral", "")]);
    let mut out_checks = Vec::new();
    let mut fits = Vec::new();
    let mut series = Vec::new();
    for &s in cfg.sweep("s_integral_a") {
        let name = format!("integral_a(s={s})");
        let vals: Vec<f64> = eps.iter().map(|&e| sup_bound_integral_a(s, e)).collect::<Result<_, _>>().map_err(lib(cfg))?;
        for (&e, &v) in eps.iter().zip(&vals) {
            table.push(&name, e, vec![v]);
        }
        let fit = fit_decay(eps, &vals, FitModel::PurePower).map_err(lib(cfg))?;
        let bound = -(1.0 - 2.0 * s).max(0.0);
        out_checks.push(
            Check::new(&format!("slope_{name}"), est_a, fit.slope, Relation::AtLeast, bound - tol, tol)
                .with_detail(format!("bound exponent {bound}")),
        );
        series.push(PlotSeries::from_fit(&name, &fit));
        fits.push((name, est_a, fit));
    }
    let w = cfg.weights;
    let k = cfg.num("k");
    let name = format!("integral_b(s={},sigma={},k={k})", w.s, w.sigma);
    let vals: Vec<f64> =
        eps.iter().map(|&e| sup_bound_integral_b(w.s, w.sigma, k as u32, e)).collect::<Result<_, _>>().map_err(lib(cfg))?;
    for (&e, &v) in eps.iter().zip(&vals) {
        table.push(&name, e, vec![v]);
    }
    let fit = fit_decay(eps, &vals, FitModel::PurePower).map_err(lib(cfg))?;
    let bound = -2.0 + 2.0 * w.sigma.min(w.s + 0.5);
    out_checks.push(
        Check::new(&format!("slope_{name}"), est_b, fit.slope, Relation::AtLeast, bound - tol, tol)
            .with_detail(format!("bound exponent {bound}")),
    );
    series.push(PlotSeries::from_fit(&name, &fit));
    fits.push((name, est_b, fit));
    let mut out = Outcome::new(table);
    out.checks = out_checks;
    for (name, est, fit) in fits {
        out.fit(&name, est, fit);
    }
    out.plot = Some(Plot {
        title: "sup integrals against epsilon".into(),
        x_label: "epsilon".into(),
        y_label: "sup over x".into(),
        series,
    });
    Ok(out)
}

/// `sup ⟨x⟩^{−σα}|K_t(x, y)|⟨y⟩^{−σα}` of the free propagator against `t`.
pub fn free_decay(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let estimate = cfg.experiment.estimates()[0];
    let ts = cfg.sweep("t");
    let alpha = cfg.exponent.alpha;
    let sigma = cfg.weights.sigma;
    let sups: Vec<f64> =
        ts.iter().map(|&t| free_reference_sup(t, alpha, sigma, &cfg.cutoff)).collect::<Result<_, _>>().map_err(lib(cfg))?;
    let mut table = Table::new(Column::new("t", "time"), vec![Column::new("norm_sup", "weighted kernel sup")]);
    for (&t, &v) in ts.iter().zip(&sups) {
        table.push("free", t, vec![v]);
    }
    let fit = fit_decay(ts, &sups, FitModel::PurePower).map_err(lib(cfg))?;
    let target = alpha * (1.0 + sigma);
    let tol = cfg.tol("slope");
    let mut out = Outcome::new(table);
    out.checks.push(
        Check::new("decay_rate", estimate, -fit.slope, Relation::AtLeast, target - tol, tol)
            .with_detail(format!("decay rate = -slope, target alpha(1 + sigma) = {target}")),
    );
    out.plot = Some(Plot {
        title: format!("free weighted decay, sigma = {sigma}, alpha = {alpha}"),
        x_label: "t".into(),
        y_label: "weighted kernel sup".into(),
        series: vec![PlotSeries::from_fit("free", &fit)],
    });
    out.fit("free_decay", estimate, fit);
    Ok(out)
}

/// Kernel sup over `|x|, |y| ≤ c·t` against `t`.
pub fn appendix(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let estimate = cfg.experiment.estimates()[0];
    let ts = cfg.sweep("t");
    let alpha = cfg.exponent.alpha;
    let c = cfg.num("region_factor");
    let sups = appendix_sups(ts, alpha, &cfg.cutoff, c).map_err(lib(cfg))?;
    let mut table = Table::new(Column::new("t", "time"), vec![Column::new("norm_sup", "kernel sup in cone")]);
    for (&t, &v) in ts.iter().zip(&sups) {
        table.push("cone", t, vec![v]);
    }
    let fit = fit_decay(ts, &sups, FitModel::PurePower).map_err(lib(cfg))?;
    let order = cfg.num("order");
    let tol = cfg.tol("slope");
    let mut out = Outcome::new(table);
    out.checks.push(
        Check::new("cone_slope", estimate, fit.slope, Relation::AtMost, -order + tol, tol)
            .with_detail(format!("polynomial order {order}, region factor {c}")),
    );
    out.plot = Some(Plot {
        title: format!("kernel inside |x|,|y| <= {c} t, alpha = {alpha}"),
        x_label: "t".into(),
        y_label: "kernel sup".into(),
        series: vec![PlotSeries::from_fit("cone", &fit)],
    });
    out.fit("cone_decay", estimate, fit);
    Ok(out)
}
