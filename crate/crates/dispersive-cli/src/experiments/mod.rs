//! The named experiments and their defaults.

mod decay;
mod free;
mod perturbed;
mod spectral;

use std::collections::BTreeMap;
use std::sync::Arc;

use dispersive::free_resolvent::CutoffSpec;
use dispersive::lippmann_schwinger::{build_mesh, PotentialSpec, RadialParams, RadialSettings};
use dispersive::spectral_synthesis::{EvaluationGrid, ResolventFactory};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::report::Outcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    #[serde(rename = "verify-free-kernels")]
    FreeKernels,
    #[serde(rename = "verify-bound-integrals")]
    BoundIntegrals,
    #[serde(rename = "verify-resolvent-estimates")]
    ResolventEstimates,
    #[serde(rename = "verify-birman-schwinger")]
    BirmanSchwinger,
    #[serde(rename = "verify-holder")]
    Holder,
    #[serde(rename = "verify-window")]
    Window,
    #[serde(rename = "verify-free-decay")]
    FreeDecay,
    #[serde(rename = "verify-perturbed-decay")]
    PerturbedDecay,
    #[serde(rename = "appendix-check")]
    Appendix,
}

/// Values used when a config leaves a field out.
pub struct Defaults {
    pub potential: PotentialSpec,
    /// `(σ, s, s₁)`.
    pub weights: (f64, f64, f64),
    pub p: f64,
    pub cutoff: CutoffSpec,
    pub sweep: BTreeMap<String, Vec<f64>>,
    pub numerics: BTreeMap<String, f64>,
    pub tolerances: BTreeMap<String, f64>,
}

fn table<T: Clone>(items: &[(&str, T)]) -> BTreeMap<String, T> {
    items.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn dyadic(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|j| 0.5f64.powi(j)).collect()
}

fn chi(a: f64) -> CutoffSpec {
    CutoffSpec::chi(a).expect("valid cutoff")
}

impl ExperimentKind {
    pub const ALL: &'static [ExperimentKind] = &[
        ExperimentKind::FreeKernels,
        ExperimentKind::BoundIntegrals,
        ExperimentKind::ResolventEstimates,
        ExperimentKind::BirmanSchwinger,
        ExperimentKind::Holder,
        ExperimentKind::Window,
        ExperimentKind::FreeDecay,
        ExperimentKind::PerturbedDecay,
        ExperimentKind::Appendix,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::FreeKernels => "verify-free-kernels",
            ExperimentKind::BoundIntegrals => "verify-bound-integrals",
            ExperimentKind::ResolventEstimates => "verify-resolvent-estimates",
            ExperimentKind::BirmanSchwinger => "verify-birman-schwinger",
            ExperimentKind::Holder => "verify-holder",
            ExperimentKind::Window => "verify-window",
            ExperimentKind::FreeDecay => "verify-free-decay",
            ExperimentKind::PerturbedDecay => "verify-perturbed-decay",
            ExperimentKind::Appendix => "appendix-check",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|k| k.name() == name)
    }

    pub fn description(self) -> &'static str {
        match self {
            ExperimentKind::FreeKernels => "closed-form λ-derivative kernels of R₀ against finite differences",
            ExperimentKind::BoundIntegrals => "ε-blowup of the radial sup integrals behind the free weighted bounds",
            ExperimentKind::ResolventEstimates => "λ-decay and ε-blowup of weighted free and perturbed resolvent norms",
            ExperimentKind::BirmanSchwinger => "λ-decay of ‖K₀‖ and uniform bound on ‖(1 + K₀)⁻¹‖",
            ExperimentKind::Holder => "uniform bounds and Hölder regularity of the spectral density T(λ)",
            ExperimentKind::Window => "A- and t-scaling of the frequency-window propagator pieces",
            ExperimentKind::FreeDecay => "weighted time decay of the free propagator",
            ExperimentKind::PerturbedDecay => "weighted time decay of the perturbed propagator",
            ExperimentKind::Appendix => "super-polynomial decay of the free kernel inside the light cone",
        }
    }

    /// Identifiers of the estimates this experiment targets; see [`crate::coverage`].
    pub fn estimates(self) -> &'static [&'static str] {
        match self {
            ExperimentKind::FreeKernels => &["free-resolvent-derivative-kernels"],
            ExperimentKind::BoundIntegrals => &["free-weighted-sup-integral-a", "free-weighted-sup-integral-b"],
            ExperimentKind::ResolventEstimates => &[
                "free-resolvent-frequency-decay",
                "free-resolvent-absorption-blowup",
                "perturbed-resolvent-frequency-decay",
                "perturbed-resolvent-derivative-bound",
                "perturbed-resolvent-top-derivative-blowup",
            ],
            ExperimentKind::BirmanSchwinger => &["birman-schwinger-decay", "birman-schwinger-inverse-bound"],
            ExperimentKind::Holder => &["spectral-density-derivative-bound", "spectral-density-holder"],
            ExperimentKind::Window => &["frequency-window-estimate"],
            ExperimentKind::FreeDecay => &["free-weighted-decay"],
            ExperimentKind::PerturbedDecay => {
                &["perturbed-weighted-decay", "perturbed-decay-limited-by-potential", "cutoff-decomposition"]
            }
            ExperimentKind::Appendix => &["cone-interior-decay"],
        }
    }

    pub fn defaults(self) -> Defaults {
        let inverse_power = |c: f64, d: f64| PotentialSpec::inverse_power(c, d).expect("valid potential");
        let (potential, weights, p, cutoff) = match self {
            ExperimentKind::FreeKernels | ExperimentKind::BoundIntegrals => {
                (PotentialSpec::zero(), (0.5, 0.25, 1.0), f64::INFINITY, chi(1.0))
            }
            ExperimentKind::ResolventEstimates => (inverse_power(1.0, 0.8), (0.5, 0.0, 1.0), f64::INFINITY, chi(1.0)),
            ExperimentKind::BirmanSchwinger => (inverse_power(1.0, 1.0), (0.5, 0.0, 1.0), f64::INFINITY, chi(1.0)),
            ExperimentKind::Holder => {
                (PotentialSpec::compact_bump(1.0, 1.5).expect("valid potential"), (0.5, 0.0, 1.0), f64::INFINITY, chi(1.0))
            }
            ExperimentKind::Window | ExperimentKind::PerturbedDecay => (inverse_power(1.0, 0.8), (0.5, 0.0, 1.0), 4.0, chi(1.0)),
            ExperimentKind::FreeDecay | ExperimentKind::Appendix => (PotentialSpec::zero(), (0.5, 0.0, 1.0), f64::INFINITY, chi(1.0)),
        };
        let (sweep, numerics, tolerances) = match self {
            ExperimentKind::FreeKernels => (
                table::<Vec<f64>>(&[]),
                table(&[("samples", 100.0), ("step", 1e-4), ("lambda_min", 0.5), ("lambda_max", 8.0), ("box", 3.0), ("min_distance", 0.05)]),
                table(&[("fd_relative", 1e-6), ("conjugation", 1e-14)]),
            ),
            ExperimentKind::BoundIntegrals => (
                table(&[("epsilon", dyadic(1, 6)), ("s_integral_a", vec![-0.25, 0.0, 0.25])]),
                table(&[("k", 1.0)]),
                table(&[("slope", 0.15)]),
            ),
            ExperimentKind::ResolventEstimates => (
                table(&[("lambda", vec![2.0, 4.0, 8.0, 16.0]), ("epsilon", dyadic(1, 6))]),
                table(&[
                    ("free_lambda_epsilon", 0.5),
                    ("free_lambda_s", 1.0),
                    ("free_epsilon_lambda", 4.0),
                    ("perturbed_lambda", 2.0),
                    ("top_s", 0.5),
                    ("r_max_per_inverse_epsilon", 25.0),
                    ("r_max_min", 40.0),
                ]),
                table(&[("lambda_slope", 0.15), ("epsilon_slope", 0.15)]),
            ),
            ExperimentKind::BirmanSchwinger => (
                table(&[("lambda", vec![2.0, 4.0, 8.0, 16.0, 32.0])]),
                table(&[("epsilon", 0.1), ("r_max", 60.0)]),
                table(&[("slope", 0.15), ("refinement", 0.05)]),
            ),
            ExperimentKind::Holder => (
                table(&[("gap", dyadic(1, 6)), ("lambda", vec![1.0, 2.0, 4.0, 8.0, 16.0])]),
                table(&[
                    ("lambda0", 2.0),
                    ("epsilon", 1e-3),
                    ("r_max", 6.0),
                    ("grid_r_min", 0.3),
                    ("grid_r_max", 3.0),
                    ("grid_shells", 6.0),
                ]),
                table(&[("slope", 0.15), ("bound_slope", 0.15)]),
            ),
            ExperimentKind::Window => (
                table(&[("A", vec![4.0, 8.0, 16.0]), ("t", vec![2.0, 4.0, 8.0])]),
                table(&[
                    ("fixed_t", 4.0),
                    ("fixed_A", 8.0),
                    ("r_max", 8.0),
                    ("grid_r_min", 0.25),
                    ("grid_r_max", 4.0),
                    ("grid_shells", 12.0),
                    ("epsilon_reg", 1e-3),
                ]),
                table(&[("slope", 0.2)]),
            ),
            ExperimentKind::FreeDecay => (table(&[("t", vec![5.0, 10.0, 20.0, 40.0, 80.0])]), table::<f64>(&[]), table(&[("slope", 0.15)])),
            ExperimentKind::PerturbedDecay => (
                table(&[
                    ("t", vec![5.0, 7.0, 10.0, 14.0, 20.0, 28.0, 40.0, 56.0, 80.0, 100.0]),
                    ("sigma", vec![0.5, 1.0]),
                    ("window_A", vec![8.0, 16.0]),
                ]),
                table(&[
                    ("a_rule_power", 4.0),
                    ("window_t", 4.0),
                    ("max_window", 32.0),
                    ("r_max", 8.0),
                    ("grid_r_min", 0.25),
                    ("grid_r_max", 4.0),
                    ("grid_shells", 12.0),
                    ("epsilon_reg", 1e-3),
                ]),
                table(&[("endpoint", 0.2), ("limited", 0.25), ("interpolated", 0.2), ("decomposition", 1e-10)]),
            ),
            ExperimentKind::Appendix => (
                table(&[("t", vec![10.0, 20.0, 40.0, 80.0])]),
                table(&[("region_factor", 0.25), ("order", 3.0)]),
                table(&[("slope", 0.0)]),
            ),
        };
        Defaults { potential, weights, p, cutoff, sweep, numerics, tolerances }
    }

    /// Cross-field checks beyond the per-section ones.
    pub fn validate(self, cfg: &ExperimentConfig) -> CliResult<()> {
        let positive = |section: &str, key: &str, values: &[f64]| -> CliResult<()> {
            if values.iter().any(|v| !(*v > 0.0)) {
                return Err(CliError::usage(format!("{section}.{key}"), "entries must be positive"));
            }
            Ok(())
        };
        for (k, v) in &cfg.sweep {
            if k != "s_integral_a" {
                positive("sweep", k, v)?;
            }
        }
        match self {
            ExperimentKind::FreeKernels => {
                if cfg.num("samples") < 1.0 {
                    return Err(CliError::usage("numerics.samples", "must be at least 1"));
                }
                positive("numerics", "step", &[cfg.num("step")])?;
                if !(cfg.num("lambda_max") > cfg.num("lambda_min")) {
                    return Err(CliError::usage("numerics.lambda_max", "must exceed lambda_min"));
                }
            }
            ExperimentKind::FreeDecay | ExperimentKind::PerturbedDecay | ExperimentKind::Appendix => {
                if cfg.sweep("t").iter().any(|&t| t < 1.0) {
                    return Err(CliError::usage("sweep.t", "times must satisfy |t| >= 1"));
                }
            }
            ExperimentKind::Window => {
                if cfg.exponent.p.is_infinite() {
                    return Err(CliError::usage("exponent.p", "the window estimate needs finite p"));
                }
            }
            _ => {}
        }
        if self == ExperimentKind::PerturbedDecay {
            if !(cfg.exponent.p.is_finite() && cfg.exponent.p > 2.0) {
                return Err(CliError::usage("exponent.p", "the interpolated decay needs 2 < p < inf"));
            }
            if cfg.sweep("sigma").iter().any(|&s| !(s > 0.0 && s <= 1.0)) {
                return Err(CliError::usage("sweep.sigma", "entries must lie in (0, 1]"));
            }
        }
        Ok(())
    }
}

/// Runs the experiment described by `cfg`.
pub fn execute(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    match cfg.experiment {
        ExperimentKind::FreeKernels => free::free_kernels(cfg),
        ExperimentKind::BoundIntegrals => free::bound_integrals(cfg),
        ExperimentKind::FreeDecay => free::free_decay(cfg),
        ExperimentKind::Appendix => free::appendix(cfg),
        ExperimentKind::ResolventEstimates => perturbed::resolvent_estimates(cfg),
        ExperimentKind::BirmanSchwinger => perturbed::birman_schwinger(cfg),
        ExperimentKind::Holder => spectral::holder(cfg),
        ExperimentKind::Window => spectral::window(cfg),
        ExperimentKind::PerturbedDecay => decay::perturbed_decay(cfg),
    }
}

/// Wraps library errors with the experiment name.
pub(crate) fn lib(cfg: &ExperimentConfig) -> impl Fn(dispersive::Error) -> CliError + '_ {
    move |e| CliError::from_library(cfg.experiment.name(), "numerics", e)
}

pub(crate) fn radial_params(r_max: f64) -> RadialParams {
    RadialParams { r_max, settings: RadialSettings::default() }
}

/// Resolvent factory on the configured mesh, or the partial-wave backend
/// truncated at `r_max`.
pub(crate) fn factory(cfg: &ExperimentConfig, r_max: f64) -> CliResult<ResolventFactory> {
    match &cfg.mesh {
        Some(m) => {
            let mesh = build_mesh(m.r_trunc, m.n_r, m.n_angular).map_err(|e| CliError::from_library(cfg.experiment.name(), "mesh", e))?;
            Ok(ResolventFactory::mesh(cfg.potential, Arc::new(mesh)))
        }
        None => ResolventFactory::radial(cfg.potential, radial_params(r_max)).map_err(|e| CliError::from_library(cfg.experiment.name(), "", e)),
    }
}

pub(crate) fn shell_grid(cfg: &ExperimentConfig) -> CliResult<EvaluationGrid> {
    let count = cfg.num("grid_shells");
    if count < 1.0 || count.fract() != 0.0 {
        return Err(CliError::usage("numerics.grid_shells", "must be a positive integer"));
    }
    EvaluationGrid::shells(cfg.num("grid_r_min"), cfg.num("grid_r_max"), count as usize, 0.0).map_err(lib(cfg))
}
