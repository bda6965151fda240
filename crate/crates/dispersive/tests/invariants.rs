//! Structural invariants as property tests.

use dispersive::free_resolvent::{free_kernel, ComplexFrequency, LebesgueExponent, Sign};
use dispersive::lippmann_schwinger::{OperatorKernel, PotentialSpec, RadialParams, RadialSettings};
use dispersive::norm_estimation::{interpolated_norm, kernel_sup_norm, l2_operator_norm, test_pair_lower_bound};
use dispersive::spectral_synthesis::{decomposition_defect, ResolventFactory};
use dispersive::{Complex64, Point};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn point() -> impl Strategy<Value = Point> {
    prop::array::uniform3(-3.0..3.0f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn free_kernel_minus_branch_is_the_conjugate(
        x in point(),
        y in point(),
        lambda in 0.1..20.0f64,
        eps in 0.0..1.0f64,
        k in 0..4i32,
    ) {
        prop_assume!((0..3).map(|i| (x[i] - y[i]).powi(2)).sum::<f64>() > 1e-4);
        let plus = ComplexFrequency::new(lambda, eps, Sign::Plus).unwrap();
        let a = free_kernel(&x, &y, &plus, k).unwrap();
        let b = free_kernel(&x, &y, &plus.with_sign(Sign::Minus), k).unwrap();
        prop_assert!((a.conj() - b).norm() <= 1e-14 * a.norm().max(1e-300));
        // and symmetric in x, y
        let c = free_kernel(&y, &x, &plus, k).unwrap();
        prop_assert!((a - c).norm() <= 1e-14 * a.norm().max(1e-300));
    }

    #[test]
    fn cutoff_decomposition_is_exact(a in 0.2..3.0f64, extra in 0.0..40.0f64) {
        let big_a = 2.0 * (a + 0.5) + extra;
        let d = decomposition_defect(a, big_a, 400).unwrap();
        prop_assert!(d < 1e-10, "a={a} A={big_a}: {d}");
    }

    #[test]
    fn witness_lower_bound_never_exceeds_interpolated_norm(
        n in 2..9usize,
        seed in prop::collection::vec(-1.0..1.0f64, 2 * 81),
        w in prop::collection::vec(0.05..2.0f64, 9),
        p in 2.05..40.0f64,
    ) {
        let values = DMatrix::from_fn(n, n, |i, j| Complex64::new(seed[2 * (i * n + j)], seed[2 * (i * n + j) + 1]));
        let grid: Vec<Point> = (0..n).map(|i| [i as f64, 0.0, 0.0]).collect();
        let k = OperatorKernel::square(grid, values, w[..n].to_vec()).unwrap();
        let p = LebesgueExponent::new(p).unwrap();
        let upper = interpolated_norm(l2_operator_norm(&k).unwrap(), kernel_sup_norm(&k), &p);
        let lower = test_pair_lower_bound(&k, &p, 8);
        prop_assert!(lower <= upper * (1.0 + 1e-9), "{lower} > {upper}");
    }
}

proptest! {
    // each case is a partial-wave solve
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn scattered_kernel_is_symmetric_for_real_potentials(
        lambda in 0.5..3.0f64,
        eps in 0.05..1.0f64,
        pts in prop::collection::vec(prop::array::uniform3(-1.5..1.5f64), 3),
    ) {
        prop_assume!(pts.iter().all(|p| p.iter().map(|c| c * c).sum::<f64>() > 0.01));
        let v = PotentialSpec::inverse_power(1.0, 1.0).unwrap();
        let fac = ResolventFactory::radial(v, RadialParams { r_max: 8.0, settings: RadialSettings::default() }).unwrap();
        let plus = ComplexFrequency::new(lambda, eps, Sign::Plus).unwrap();
        let s = fac.solve(&plus).unwrap().scattered_kernel(&pts, &pts, 0).unwrap();
        let m = fac.solve(&plus.with_sign(Sign::Minus)).unwrap().scattered_kernel(&pts, &pts, 0).unwrap();
        let scale = s.iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(scale > 0.0);
        let asym = (&s - s.transpose()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let conj = (&s.map(|z| z.conj()) - &m).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(asym <= 1e-8 * scale, "asymmetry {asym} vs {scale}");
        prop_assert!(conj <= 1e-12 * scale, "conjugation {conj} vs {scale}");
    }
}

#[test]
fn evanescent_channels_stay_finite_at_high_frequency() {
    let v = PotentialSpec::inverse_power(1.0, 0.8).unwrap();
    let fac = ResolventFactory::radial(v, RadialParams { r_max: 8.0, settings: RadialSettings::default() }).unwrap();
    let pts: Vec<Point> = vec![[0.25, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 4.0]];
    let f = ComplexFrequency::new(40.0, 1e-3, Sign::Plus).unwrap();
    let s = fac.solve(&f).unwrap().scattered_kernel(&pts, &pts, 0).unwrap();
    assert!(s.iter().all(|z| z.is_finite()), "{s}");
}
