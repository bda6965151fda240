use serde::Serialize;

use super::grid::EvaluationGrid;
use super::source::ResolventFactory;
use crate::error::{Error, Result};
use crate::free_resolvent::{ComplexFrequency, Sign, WeightParams};
use crate::lippmann_schwinger::{OperatorKernel, ResolventHandle};
use crate::norm_estimation::{fit_decay, kernel_sup_norm, DecayFit, FitModel};

fn same_frequency(a: &ComplexFrequency, b: &ComplexFrequency) -> bool {
    a.sign == b.sign && (a.lambda - b.lambda).abs() <= 1e-12 * a.lambda.max(1.0) && (a.epsilon - b.epsilon).abs() <= 1e-15
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::domain("alpha", format!("must lie in [0, 1], got {alpha}")));
    }
    Ok(())
}

fn weighted_scattered(
    freq: &ComplexFrequency,
    weights: &WeightParams,
    alpha: f64,
    grid: &EvaluationGrid,
    handle: &dyn ResolventHandle,
    k: u32,
    born: bool,
) -> Result<OperatorKernel> {
    check_alpha(alpha)?;
    if !same_frequency(freq, &handle.frequency()) {
        return Err(Error::Usage(format!(
            "handle solved at {:?}, kernel requested at {:?}",
            handle.frequency(),
            freq
        )));
    }
    let raw = if born {
        handle.scattered_kernel_born(&grid.points, &grid.points, k)?
    } else {
        handle.scattered_kernel(&grid.points, &grid.points, k)?
    };
    grid.with_weight_exponent(weights.sigma * alpha).weighted_kernel(&raw)
}

/// `T^±(λ; σα) = ⟨x⟩^{−σα}(R − R₀)⟨y⟩^{−σα}` sampled on the grid, from the
/// direct difference of the handle.
pub fn t_kernel(
    freq: &ComplexFrequency,
    weights: &WeightParams,
    alpha: f64,
    grid: &EvaluationGrid,
    handle: &dyn ResolventHandle,
) -> Result<OperatorKernel> {
    weighted_scattered(freq, weights, alpha, grid, handle, 0, false)
}

/// Same kernel through `−R₀VR₀ + R₀VRVR₀`.
pub fn t_kernel_born(
    freq: &ComplexFrequency,
    weights: &WeightParams,
    alpha: f64,
    grid: &EvaluationGrid,
    handle: &dyn ResolventHandle,
) -> Result<OperatorKernel> {
    weighted_scattered(freq, weights, alpha, grid, handle, 0, true)
}

/// `∂_λ^k T^±`, for `k ≤ j₀ + 2`.
pub fn t_derivative(
    k: u32,
    freq: &ComplexFrequency,
    weights: &WeightParams,
    alpha: f64,
    grid: &EvaluationGrid,
    handle: &dyn ResolventHandle,
) -> Result<OperatorKernel> {
    if k > weights.j0 + 2 {
        return Err(Error::domain("k", format!("derivative order {k} exceeds j0 + 2 = {}", weights.j0 + 2)));
    }
    weighted_scattered(freq, weights, alpha, grid, handle, k, false)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderReport {
    pub lambda0: f64,
    pub order: u32,
    pub gaps: Vec<f64>,
    /// `‖∂^{j₀+1}T(λ₀ + gap) − ∂^{j₀+1}T(λ₀)‖_{L¹→L∞}` with weights `⟨x⟩^{−σ}`.
    pub norms: Vec<f64>,
    pub fit: Option<DecayFit>,
    /// Set when every difference sits at the noise floor.
    pub inconclusive: bool,
}

impl HolderReport {
    pub fn slope(&self) -> Option<f64> {
        self.fit.as_ref().map(|f| f.slope)
    }
}

pub const HOLDER_EPSILON: f64 = 1e-3;
const NOISE_FLOOR: f64 = 1e-12;

/// Dyadic gaps `2⁻¹, …, 2⁻⁶`.
pub fn dyadic_gaps() -> Vec<f64> {
    (1..=6).map(|j| 0.5f64.powi(j)).collect()
}

/// Hölder exponent of `∂^{j₀+1}T^+` at `λ₀`, fitted over dyadic gaps.
pub fn holder_exponent(
    weights: &WeightParams,
    lambda0: f64,
    grid: &EvaluationGrid,
    factory: &ResolventFactory,
) -> Result<HolderReport> {
    holder_exponent_with(weights, lambda0, grid, factory, &dyadic_gaps(), HOLDER_EPSILON)
}

pub fn holder_exponent_with(
    weights: &WeightParams,
    lambda0: f64,
    grid: &EvaluationGrid,
    factory: &ResolventFactory,
    gaps: &[f64],
    epsilon: f64,
) -> Result<HolderReport> {
    if !(lambda0 > 0.0) {
        return Err(Error::domain("lambda0", "must be positive"));
    }
    let order = weights.j0 + 1;
    let derivative_at = |lambda: f64| -> Result<OperatorKernel> {
        let f = ComplexFrequency::new(lambda, epsilon, Sign::Plus)?;
        let h = factory.solve(&f)?;
        t_derivative(order, &f, weights, 1.0, grid, h.as_ref())
    };
    let base = derivative_at(lambda0)?;
    let mut norms = Vec::with_capacity(gaps.len());
    for &g in gaps {
        let d = derivative_at(lambda0 + g)?.sub(&base)?;
        norms.push(kernel_sup_norm(&d));
    }
    let scale = kernel_sup_norm(&base).max(1.0);
    let inconclusive = norms.iter().all(|&n| n <= NOISE_FLOOR * scale);
    if inconclusive {
        return Ok(HolderReport {
            lambda0,
            order,
            gaps: gaps.to_vec(),
            norms: vec![0.0; gaps.len()],
            fit: None,
            inconclusive,
        });
    }
    let fit = Some(fit_decay(gaps, &norms, FitModel::PurePower)?);
    Ok(HolderReport { lambda0, order, gaps: gaps.to_vec(), norms, fit, inconclusive })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lippmann_schwinger::{build_mesh, PotentialSpec, RadialParams, RadialSettings};
    use std::sync::Arc;

    fn small_grid() -> EvaluationGrid {
        EvaluationGrid::shells(0.3, 3.0, 6, 0.0).unwrap()
    }

    #[test]
    fn zero_potential_gives_zero_kernel() {
        let mesh = Arc::new(build_mesh(1.0, 4, 14).unwrap());
        let fac = ResolventFactory::mesh(PotentialSpec::zero(), mesh);
        let f = ComplexFrequency::new(2.0, 0.1, Sign::Plus).unwrap();
        let w = WeightParams::new(0.5, 0.0, 1.0).unwrap();
        let h = fac.solve(&f).unwrap();
        let t = t_kernel(&f, &w, 1.0, &small_grid(), h.as_ref()).unwrap();
        assert!(kernel_sup_norm(&t) < 1e-10);
    }

    #[test]
    fn direct_and_born_routes_agree_on_the_mesh() {
        let v = PotentialSpec::compact_bump(1.0, 1.0).unwrap();
        let mesh = Arc::new(build_mesh(1.0, 10, 38).unwrap());
        let fac = ResolventFactory::mesh(v, mesh);
        let f = ComplexFrequency::new(2.0, 0.1, Sign::Plus).unwrap();
        let w = WeightParams::new(0.5, 0.0, 1.0).unwrap();
        let h = fac.solve(&f).unwrap();
        let g = EvaluationGrid::shells(0.3, 2.5, 6, 0.0).unwrap();
        let a = t_kernel(&f, &w, 1.0, &g, h.as_ref()).unwrap();
        let b = t_kernel_born(&f, &w, 1.0, &g, h.as_ref()).unwrap();
        let rel = kernel_sup_norm(&a.sub(&b).unwrap()) / kernel_sup_norm(&a);
        assert!(rel < 1e-4, "{rel}");
    }

    #[test]
    fn minus_branch_conjugates() {
        let v = PotentialSpec::compact_bump(1.0, 1.0).unwrap();
        let mesh = Arc::new(build_mesh(1.0, 8, 26).unwrap());
        let fac = ResolventFactory::mesh(v, mesh);
        let w = WeightParams::new(0.5, 0.0, 1.0).unwrap();
        let fp = ComplexFrequency::new(1.5, 1e-3, Sign::Plus).unwrap();
        let fm = fp.conjugate();
        let g = small_grid();
        let tp = t_kernel(&fp, &w, 0.5, &g, fac.solve(&fp).unwrap().as_ref()).unwrap();
        let tm = t_kernel(&fm, &w, 0.5, &g, fac.solve(&fm).unwrap().as_ref()).unwrap();
        let rel = kernel_sup_norm(&tm.sub(&tp.conj()).unwrap()) / kernel_sup_norm(&tp);
        assert!(rel < 1e-10, "{rel}");
    }

    #[test]
    fn frequency_mismatch_is_usage_error() {
        let mesh = Arc::new(build_mesh(1.0, 4, 14).unwrap());
        let fac = ResolventFactory::mesh(PotentialSpec::compact_bump(1.0, 1.0).unwrap(), mesh);
        let f = ComplexFrequency::new(2.0, 0.1, Sign::Plus).unwrap();
        let h = fac.solve(&f).unwrap();
        let w = WeightParams::new(0.5, 0.0, 1.0).unwrap();
        let r = t_kernel(&f.with_lambda(2.5), &w, 1.0, &small_grid(), h.as_ref());
        assert!(matches!(r, Err(Error::Usage(_))));
    }

    #[test]
    fn derivative_order_guard_and_finite_difference() {
        let v = PotentialSpec::compact_bump(1.0, 1.5).unwrap();
        let fac = ResolventFactory::radial(v, RadialParams { r_max: 6.0, settings: RadialSettings::default() }).unwrap();
        let w = WeightParams::new(0.5, 0.0, 1.0).unwrap();
        let g = small_grid();
        let f = ComplexFrequency::new(1.5, 0.05, Sign::Plus).unwrap();
        let h = fac.solve(&f).unwrap();
        assert!(matches!(t_derivative(3, &f, &w, 1.0, &g, h.as_ref()), Err(Error::Domain { .. })));
        let d = t_derivative(1, &f, &w, 1.0, &g, h.as_ref()).unwrap();
        let step = 1e-3;
        let at = |l: f64| {
            let ff = f.with_lambda(l);
            t_kernel(&ff, &w, 1.0, &g, fac.solve(&ff).unwrap().as_ref()).unwrap()
        };
        let fd = at(1.5 + step).sub(&at(1.5 - step)).unwrap().scale((0.5 / step).into());
        let rel = kernel_sup_norm(&fd.sub(&d).unwrap()) / kernel_sup_norm(&d);
        assert!(rel < 1e-3, "{rel}");
        let d0 = t_derivative(0, &f, &w, 1.0, &g, h.as_ref()).unwrap();
        assert_eq!(d0, t_kernel(&f, &w, 1.0, &g, h.as_ref()).unwrap());
    }

    #[test]
    fn zero_potential_holder_is_inconclusive() {
        let fac = ResolventFactory::radial(PotentialSpec::zero(), RadialParams { r_max: 6.0, settings: RadialSettings::default() })
            .unwrap();
        let w = WeightParams::new(0.5, 0.0, 1.0).unwrap();
        let r = holder_exponent(&w, 2.0, &small_grid(), &fac).unwrap();
        assert!(r.inconclusive && r.fit.is_none() && r.norms.iter().all(|&n| n == 0.0));
    }
}
