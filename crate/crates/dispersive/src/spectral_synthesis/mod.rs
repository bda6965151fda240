//! Spectral synthesis of the perturbed propagator: the kernels
//! `T^±(λ) = ⟨x⟩^{−σα}(R − R₀)(λ ± i0)⟨y⟩^{−σα}`, the oscillatory λ-integral
//! `∫ e^{itλ} λ^{1−2α} cutoff(λ) T(λ) dλ`, frequency windows and the weighted
//! decay experiment.

mod decay;
mod grid;
mod kernels;
mod source;
mod synthesis;

pub use decay::{
    decay_from_samples, decay_jobs, decomposition_defect, free_reference_sup, full_decay_experiment, DecayExperiment, DecayRow, DecaySettings,
    FREE_SAMPLES,
};
pub use grid::EvaluationGrid;
pub use kernels::{
    dyadic_gaps, holder_exponent, holder_exponent_with, t_derivative, t_kernel, t_kernel_born, HolderReport,
    HOLDER_EPSILON,
};
pub use source::{FactoryBackend, ResolventFactory};
pub use synthesis::{
    frequency_window_norm, frequency_window_norms, propagator_difference, sample_density, synthesize, synthesize_from,
    window_cutoff, window_jobs, window_norms_from_samples, LambdaPanels, PropagatorRequest, SpectralSamples, SynthesisJob, SynthesisSettings, WindowNorm,
};
