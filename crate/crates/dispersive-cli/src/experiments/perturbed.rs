//! Weighted resolvent norms and the Birman–Schwinger operator.

use dispersive::free_resolvent::{ComplexFrequency, Sign};
use dispersive::lippmann_schwinger::{
    birman_schwinger_check, build_mesh, solve_resolvent, weighted_resolvent_norm, Backend, MeshParams, PotentialSpec,
    QuadratureMesh, RadialResolvent, RadialSettings, ResolventOperator, WeightPair,
};
use dispersive::norm_estimation::{fit_decay, DecayFit, FitModel};

use super::{lib, radial_params};
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::plot::{Plot, PlotSeries};
use crate::report::{Check, Column, Outcome, Relation, Table};

/// Solved operator at one spectral point, on whichever backend the config selects.
enum Solved {
    Mesh(dispersive::lippmann_schwinger::MeshResolvent),
    Radial(RadialResolvent),
}

impl Solved {
    fn new(cfg: &ExperimentConfig, mesh: Option<&QuadratureMesh>, v: &PotentialSpec, f: &ComplexFrequency, r_max: f64) -> CliResult<Self> {
        Ok(match mesh {
            Some(m) => Solved::Mesh(solve_resolvent(m, v, f).map_err(lib(cfg))?),
            None => Solved::Radial(
                RadialResolvent::new(v, f, r_max, RadialSettings::default())
                    .map_err(|e| CliError::from_library(cfg.experiment.name(), "", e))?,
            ),
        })
    }

    fn norm(&self, cfg: &ExperimentConfig, free: bool, pair: WeightPair, k: u32) -> CliResult<f64> {
        let op = match self {
            Solved::Mesh(h) => ResolventOperator::Mesh(h),
            Solved::Radial(r) => ResolventOperator::Radial(r),
        };
        weighted_resolvent_norm(op, free, pair, k).map_err(lib(cfg))
    }
}

fn mesh_of(cfg: &ExperimentConfig, params: Option<MeshParams>) -> CliResult<Option<QuadratureMesh>> {
    params
        .map(|m| build_mesh(m.r_trunc, m.n_r, m.n_angular).map_err(|e| CliError::from_library(cfg.experiment.name(), "mesh", e)))
        .transpose()
}

struct Series {
    name: String,
    estimate: &'static str,
    xs: Vec<f64>,
    ys: Vec<f64>,
}

/// λ-decay and ε-blowup of `‖⟨x⟩^{−a} R^{(k)} ⟨x⟩^{−b}‖` for `R₀` and `R`.
pub fn resolvent_estimates(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let est = cfg.experiment.estimates();
    let w = cfg.weights;
    let v = cfg.potential;
    let mesh = mesh_of(cfg, cfg.mesh)?;
    let r_max_for = |eps: f64| (cfg.num("r_max_per_inverse_epsilon") / eps).max(cfg.num("r_max_min"));
    let freq = |l: f64, e: f64| ComplexFrequency::new(l, e, Sign::Plus).map_err(lib(cfg));
    let mut series: Vec<Series> = Vec::new();

    // free, λ sweep
    let e0 = cfg.num("free_lambda_epsilon");
    let s_l = cfg.num("free_lambda_s");
    let mut ys = Vec::new();
    for &l in cfg.sweep("lambda") {
        let op = Solved::new(cfg, mesh.as_ref(), &PotentialSpec::zero(), &freq(l, e0)?, r_max_for(e0))?;
        ys.push(op.norm(cfg, true, WeightPair { a: s_l, b: w.s1 }, 0)?);
    }
    series.push(Series { name: "free_lambda".into(), estimate: est[0], xs: cfg.sweep("lambda").to_vec(), ys });

    // free and perturbed, ε sweeps
    let eps = cfg.sweep("epsilon").to_vec();
    let l_free = cfg.num("free_epsilon_lambda");
    let l_pert = cfg.num("perturbed_lambda");
    let k0 = v.k0;
    let top_s = cfg.num("top_s");
    let mut free_eps = Vec::new();
    let mut pert: Vec<Vec<f64>> = vec![Vec::new(); k0 as usize + 3];
    for &e in &eps {
        let op = Solved::new(cfg, mesh.as_ref(), &PotentialSpec::zero(), &freq(l_free, e)?, r_max_for(e))?;
        free_eps.push(op.norm(cfg, true, WeightPair { a: w.s, b: w.s1 }, 0)?);
        let op = Solved::new(cfg, mesh.as_ref(), &v, &freq(l_pert, e)?, r_max_for(e))?;
        for k in 0..=k0 + 1 {
            pert[k as usize].push(op.norm(cfg, false, WeightPair::for_order(k, w.s, w.s1), k)?);
        }
        pert[k0 as usize + 2].push(op.norm(cfg, false, WeightPair::top_order(k0, top_s), k0 + 2)?);
    }
    series.push(Series { name: "free_epsilon".into(), estimate: est[1], xs: eps.clone(), ys: free_eps });
    for (k, ys) in pert.into_iter().enumerate() {
        let estimate = match k as u32 {
            0 => est[2],
            k if k <= k0 + 1 => est[3],
            _ => est[4],
        };
        series.push(Series { name: format!("perturbed_epsilon_k{k}"), estimate, xs: eps.clone(), ys });
    }

    let mut table = Table::new(
        Column::new("sweep_point", "lambda for *_lambda series, epsilon otherwise"),
        vec![Column::new("norm", "L2->L2")],
    );
    for s in &series {
        for (&x, &y) in s.xs.iter().zip(&s.ys) {
            table.push(&s.name, x, vec![y]);
        }
    }
    let mut out = Outcome::new(table);
    let mut plot_series = Vec::new();
    let lambda_tol = cfg.tol("lambda_slope");
    let eps_tol = cfg.tol("epsilon_slope");
    let blowup = -(0.5 - w.s).max(0.0);
    for s in &series {
        let fit: DecayFit = fit_decay(&s.xs, &s.ys, FitModel::PurePower).map_err(lib(cfg))?;
        if s.name == "free_lambda" {
            out.checks.push(Check::new("free_lambda_slope_lower", s.estimate, fit.slope, Relation::AtLeast, -1.0 - lambda_tol, lambda_tol));
            out.checks.push(Check::new("free_lambda_slope_upper", s.estimate, fit.slope, Relation::AtMost, -1.0 + lambda_tol, lambda_tol));
        } else {
            let bound = if s.estimate == est[4] { -1.0 + (top_s + 0.5).min(v.delta0_prime) } else { blowup };
            out.checks.push(
                Check::new(&format!("{}_slope", s.name), s.estimate, fit.slope, Relation::AtLeast, bound - eps_tol, eps_tol)
                    .with_detail(format!("bound exponent {bound}")),
            );
        }
        plot_series.push(PlotSeries::from_fit(&s.name, &fit));
        out.fit(&s.name, s.estimate, fit);
    }
    out.plot = Some(Plot {
        title: "weighted resolvent norms".into(),
        x_label: "lambda (free_lambda) or epsilon".into(),
        y_label: "L2 -> L2 norm".into(),
        series: plot_series,
    });
    Ok(out)
}

/// `‖K₀‖` over a λ sweep, `sup_λ ‖(1 + K₀)⁻¹‖`, and its change under one
/// refinement of the discretization at the maximizing λ.
pub fn birman_schwinger(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let est = cfg.experiment.estimates();
    let v = cfg.potential;
    let eps = cfg.num("epsilon");
    let s1 = cfg.weights.s1;
    let lambdas = cfg.sweep("lambda");
    let r_max = cfg.num("r_max");
    let backend = match cfg.mesh {
        Some(m) => Backend::Mesh(m),
        None => Backend::Radial(radial_params(r_max)),
    };
    let report = birman_schwinger_check(&backend, &v, lambdas, eps, s1).map_err(lib(cfg))?;
    let worst = report
        .entries
        .iter()
        .max_by(|a, b| a.inverse_norm.total_cmp(&b.inverse_norm))
        .expect("nonempty sweep")
        .clone();
    let refined = match cfg.mesh {
        Some(m) => Backend::Mesh(MeshParams { r_trunc: m.r_trunc, n_r: m.n_r + m.n_r / 2, n_angular: 2 * m.n_angular }),
        None => {
            let f = ComplexFrequency::new(worst.lambda, eps, Sign::Plus).map_err(lib(cfg))?;
            let h = RadialResolvent::new(&v, &f, r_max, RadialSettings::default()).map_err(lib(cfg))?.step();
            Backend::Radial(dispersive::lippmann_schwinger::RadialParams { r_max, settings: RadialSettings::default().refined(h) })
        }
    };
    let fine = birman_schwinger_check(&refined, &v, &[worst.lambda], eps, s1).map_err(lib(cfg))?;
    let fine_inverse = fine.entries[0].inverse_norm;

    let mut table = Table::new(
        Column::new("lambda", "frequency"),
        vec![Column::new("norm_k0", "L2->L2"), Column::new("min_singular", ""), Column::new("inverse_norm", "L2->L2")],
    );
    for e in &report.entries {
        table.push("sweep", e.lambda, vec![e.norm_k0, e.min_singular, e.inverse_norm]);
    }
    table.push("refined", worst.lambda, vec![fine.entries[0].norm_k0, fine.entries[0].min_singular, fine_inverse]);
    let mut out = Outcome::new(table);
    let tol = cfg.tol("slope");
    match &report.fit {
        Some(fit) => {
            out.checks.push(Check::new("k0_slope_lower", est[0], fit.slope, Relation::AtLeast, -1.0 - tol, tol));
            out.checks.push(Check::new("k0_slope_upper", est[0], fit.slope, Relation::AtMost, -1.0 + tol, tol));
            out.plot = Some(Plot {
                title: format!("Birman-Schwinger norm, epsilon = {eps}, s1 = {s1}"),
                x_label: "lambda".into(),
                y_label: "norm of K0".into(),
                series: vec![PlotSeries::from_fit("norm_k0", fit)],
            });
            out.fit("k0_decay", est[0], fit.clone());
        }
        None => {
            out.checks.push(Check::new("k0_slope_lower", est[0], f64::NAN, Relation::AtLeast, -1.0 - tol, tol).with_detail("no fit: zero potential or degenerate sweep"));
        }
    }
    let tol = cfg.tol("refinement");
    let change = (fine_inverse - worst.inverse_norm).abs() / worst.inverse_norm;
    out.checks.push(
        Check::new("inverse_refinement", est[1], change, Relation::AtMost, tol, tol)
            .with_detail(format!("sup inverse norm {} at lambda {}, refined {}", worst.inverse_norm, worst.lambda, fine_inverse)),
    );
    out.notes.push(format!("sup over lambda of the inverse norm: {}", report.sup_inverse_norm));
    Ok(out)
}
