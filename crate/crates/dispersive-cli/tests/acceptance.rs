//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! Experiments run from the shipped configs; the criterion tolerances are
//! applied here to the measured values, independently of the config tolerances.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use dispersive::free_resolvent::{free_kernel, ComplexFrequency, CutoffKind, CutoffSpec, LebesgueExponent, Sign};
use dispersive::lippmann_schwinger::{OperatorKernel, PotentialSpec, RadialParams, RadialSettings};
use dispersive::norm_estimation::{interpolated_norm, kernel_sup_norm, l2_operator_norm, test_pair_lower_bound};
use dispersive::spectral_synthesis::{
    decomposition_defect, sample_density, synthesize_from, window_cutoff, EvaluationGrid, ResolventFactory, SynthesisJob,
    SynthesisSettings,
};
use dispersive::{Complex64, Point};
use dispersive_cli::report::Check;
use dispersive_cli::{default_config, run, RunOptions};
use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

struct Verdict {
    passed: bool,
    lines: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Self { passed: true, lines: Vec::new() }
    }

    fn record(&mut self, ok: bool, line: String) {
        self.passed &= ok;
        self.lines.push(format!("{} {line}", if ok { "ok  " } else { "MISS" }));
    }

    fn at_least(&mut self, what: &str, measured: f64, target: f64) {
        self.record(measured >= target, format!("{what}: {measured:.4} >= {target:.4}"));
    }

    fn at_most(&mut self, what: &str, measured: f64, target: f64) {
        self.record(measured <= target, format!("{what}: {measured:.4e} <= {target:.4e}"));
    }

    fn error(&mut self, what: &str, e: impl std::fmt::Display) {
        self.record(false, format!("{what}: error: {e}"));
    }
}

fn scratch(label: &str) -> PathBuf {
    let d = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(label);
    let _ = fs::remove_dir_all(&d);
    d
}

/// Runs a shipped config and returns its checks.
fn checks_of(label: &str) -> Result<Vec<Check>, String> {
    let cfg = default_config(label).ok_or_else(|| format!("no shipped config {label}"))?;
    let opts = RunOptions { output_dir: Some(scratch(label)), seed: None, plot: false, strict: false };
    run(&cfg, &opts).map(|r| r.outcome.checks).map_err(|e| e.to_string())
}

fn measured(checks: &[Check], name: &str) -> Result<f64, String> {
    checks.iter().find(|c| c.name == name).map(|c| c.measured).ok_or_else(|| format!("check {name} missing"))
}

fn with_checks(v: &mut Verdict, label: &str, f: impl FnOnce(&mut Verdict, &[Check]) -> Result<(), String>) {
    match checks_of(label) {
        Ok(c) => {
            if let Err(e) = f(v, &c) {
                v.error(label, e);
            }
        }
        Err(e) => v.error(label, e),
    }
}

fn free_kernel_exactness() -> Verdict {
    let mut v = Verdict::new();
    with_checks(&mut v, "free-kernels", |v, c| {
        v.at_most("max relative FD defect, 100 samples, k = 0, 1, 2", measured(c, "derivative_kernels")?, 1e-6);
        Ok(())
    });
    v
}

fn degeneracy() -> Verdict {
    let mut v = Verdict::new();
    let grid = EvaluationGrid::shells(0.25, 4.0, 6, 0.0).unwrap();
    let settings = SynthesisSettings::default();
    let jobs = vec![
        SynthesisJob { t: 5.0, alpha: 1.0, cutoff: window_cutoff(4.0).unwrap() },
        SynthesisJob { t: 5.0, alpha: 0.0, cutoff: CutoffSpec::new(CutoffKind::PsiAA, 1.0, 8.0).unwrap() },
    ];
    for (what, potential) in [("V = 0", PotentialSpec::zero()), ("V = 1e-14 <x>^-2.8 (no shortcut)", PotentialSpec::inverse_power(1e-14, 0.8).unwrap())] {
        let fac = ResolventFactory::radial(potential, RadialParams { r_max: 8.0, settings: RadialSettings::default() }).unwrap();
        match sample_density(&jobs, &grid, &fac, &settings) {
            Ok(samples) => {
                let t_sup = samples.density.iter().flat_map(|d| d.iter()).fold(0.0f64, |m, x| m.max(x.abs()));
                v.at_most(&format!("{what}: sup |T|"), t_sup, 1e-10);
                for job in &jobs {
                    match synthesize_from(&samples, job, &settings.panels) {
                        Ok(k) => {
                            let s = k.iter().fold(0.0f64, |m, z| m.max(z.norm()));
                            v.at_most(&format!("{what}: sup |Phi| at alpha = {}", job.alpha), s, 1e-10);
                        }
                        Err(e) => v.error(what, e),
                    }
                }
            }
            Err(e) => v.error(what, e),
        }
    }
    v
}

fn free_decay() -> Verdict {
    let mut v = Verdict::new();
    for (label, sigma) in [("free-decay-unweighted", 0.0), ("free-decay", 0.5)] {
        with_checks(&mut v, label, |v, c| {
            // slope <= -(1 + sigma) + 0.2
            v.at_least(&format!("sigma = {sigma}: decay rate"), measured(c, "decay_rate")?, 1.0 + sigma - 0.2);
            Ok(())
        });
    }
    v
}

fn birman_schwinger() -> Verdict {
    let mut v = Verdict::new();
    with_checks(&mut v, "birman-schwinger", |v, c| {
        let slope = measured(c, "k0_slope_lower")?;
        v.at_least("lambda-slope of |K0|", slope, -1.15);
        v.at_most("lambda-slope of |K0|", slope, -0.85);
        v.at_most("relative change of |(1 + K0)^-1| under refinement", measured(c, "inverse_refinement")?, 0.05);
        Ok(())
    });
    v
}

fn free_epsilon_exponents() -> Verdict {
    let mut v = Verdict::new();
    with_checks(&mut v, "resolvent-estimates", |v, c| {
        v.at_least("<x>^0 R0 <x>^-1 at lambda = 4, epsilon-slope", measured(c, "free_epsilon_slope")?, -0.5 - 0.15);
        Ok(())
    });
    with_checks(&mut v, "bound-integrals", |v, c| {
        for (name, exponent) in [
            ("slope_integral_a(s=-0.25)", -1.5),
            ("slope_integral_a(s=0)", -1.0),
            ("slope_integral_a(s=0.25)", -0.5),
            ("slope_integral_b(s=0.25,sigma=0.5,k=1)", -1.0),
        ] {
            v.at_least(name, measured(c, name)?, exponent - 0.15);
        }
        Ok(())
    });
    v
}

fn perturbed_epsilon_exponents() -> Verdict {
    let mut v = Verdict::new();
    with_checks(&mut v, "resolvent-estimates", |v, c| {
        // delta0 = 0.8: k0 = 0, delta0' = 0.8; s = 0 below the top order, s = 0.5 at it
        for (name, exponent) in [
            ("perturbed_epsilon_k0_slope", -0.5),
            ("perturbed_epsilon_k1_slope", -0.5),
            ("perturbed_epsilon_k2_slope", -1.0 + 0.8),
        ] {
            v.at_least(name, measured(c, name)?, exponent - 0.15);
        }
        Ok(())
    });
    v
}

fn holder() -> Verdict {
    let mut v = Verdict::new();
    with_checks(&mut v, "holder", |v, c| {
        v.at_least("Hoelder slope, sigma = 0.5", measured(c, "holder_slope")?, 0.5 - 0.15);
        Ok(())
    });
    v
}

fn window() -> Verdict {
    let mut v = Verdict::new();
    with_checks(&mut v, "window", |v, c| {
        v.at_most("A-slope at t = 4, p = 4", measured(c, "A_sweep_slope")?, -0.5 + 0.2);
        v.at_most("t-slope at A = 8, p = 4", measured(c, "t_sweep_slope")?, 0.5 + 0.2);
        Ok(())
    });
    v
}

fn main_decay() -> Verdict {
    let mut v = Verdict::new();
    let cfg = default_config("perturbed-decay").unwrap();
    let (delta0, alpha) = (cfg.potential.delta0, cfg.exponent.alpha);
    with_checks(&mut v, "perturbed-decay", |v, c| {
        for &sigma in cfg.sweep("sigma") {
            let tag = format!("sigma={sigma}");
            let beta = measured(c, &format!("endpoint_beta({tag})"))?;
            if sigma < delta0 {
                v.at_least(&format!("{tag}: log-corrected endpoint beta"), beta, 1.0 + sigma - 0.2);
            } else {
                v.at_least(&format!("{tag}: endpoint beta"), beta, 1.0 + delta0 - 0.25);
            }
            let rate = measured(c, &format!("interpolated_rate({tag})"))?;
            v.at_least(&format!("{tag}: interpolated rate at p = 4"), rate, alpha * (1.0 + sigma) - 0.2);
        }
        Ok(())
    });
    v
}

fn appendix() -> Verdict {
    let mut v = Verdict::new();
    with_checks(&mut v, "appendix", |v, c| {
        v.at_most("inside-cone slope over t = 10..80", measured(c, "cone_slope")?, -3.0);
        Ok(())
    });
    v
}

fn property(v: &mut Verdict, what: &str, cases: u32, f: impl FnOnce(&mut TestRunner) -> Result<(), String>) {
    let mut runner = TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() });
    match f(&mut runner) {
        Ok(()) => v.record(true, format!("{what}: {cases} cases")),
        Err(e) => v.record(false, format!("{what}: {e}")),
    }
}

fn structural() -> Verdict {
    let mut v = Verdict::new();
    let pt = || prop::array::uniform3(-3.0..3.0f64);
    property(&mut v, "conjugation symmetry of the free kernel", 128, |r| {
        r.run(&(pt(), pt(), 0.1..20.0f64, 0.0..1.0f64, 0..3i32), |(x, y, l, e, k)| {
            prop_assume!((0..3).map(|i| (x[i] - y[i]).powi(2)).sum::<f64>() > 1e-4);
            let f = ComplexFrequency::new(l, e, Sign::Plus).unwrap();
            let a = free_kernel(&x, &y, &f, k).unwrap();
            let b = free_kernel(&x, &y, &f.with_sign(Sign::Minus), k).unwrap();
            prop_assert!((a.conj() - b).norm() <= 1e-14 * a.norm());
            Ok(())
        })
        .map_err(|e| e.to_string())
    });
    property(&mut v, "kernel symmetry and conjugation for real V", 6, |r| {
        let fac = ResolventFactory::radial(
            PotentialSpec::inverse_power(1.0, 0.8).unwrap(),
            RadialParams { r_max: 8.0, settings: RadialSettings::default() },
        )
        .unwrap();
        let strat = (0.5..4.0f64, 0.05..1.0f64, prop::collection::vec(prop::array::uniform3(-2.0..2.0f64), 3));
        r.run(&strat, |(l, e, pts)| {
            prop_assume!(pts.iter().all(|p| p.iter().map(|c| c * c).sum::<f64>() > 0.01));
            let f = ComplexFrequency::new(l, e, Sign::Plus).unwrap();
            let s = fac.solve(&f).unwrap().scattered_kernel(&pts, &pts, 0).unwrap();
            let m = fac.solve(&f.with_sign(Sign::Minus)).unwrap().scattered_kernel(&pts, &pts, 0).unwrap();
            let scale = s.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let asym = (&s - s.transpose()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            let conj = (&s.map(|z| z.conj()) - &m).iter().map(|z| z.norm()).fold(0.0, f64::max);
            prop_assert!(asym <= 1e-8 * scale && conj <= 1e-12 * scale, "asym {} conj {} scale {}", asym, conj, scale);
            Ok(())
        })
        .map_err(|e| e.to_string())
    });
    property(&mut v, "decomposition chi = psi + eta to 1e-10", 32, |r| {
        r.run(&(0.2..3.0f64, 0.0..40.0f64), |(a, extra)| {
            let big_a = 2.0 * (a + 0.5) + extra;
            let d = decomposition_defect(a, big_a, 400).unwrap();
            prop_assert!(d < 1e-10, "a {} A {}: {}", a, big_a, d);
            Ok(())
        })
        .map_err(|e| e.to_string())
    });
    property(&mut v, "lower bound <= interpolated bound", 64, |r| {
        let strat = (2..8usize, prop::collection::vec(-1.0..1.0f64, 128), prop::collection::vec(0.05..2.0f64, 8), 2.05..40.0f64);
        r.run(&strat, |(n, seed, w, p)| {
            let values = random_matrix(n, &seed);
            let grid: Vec<Point> = (0..n).map(|i| [i as f64, 0.0, 0.0]).collect();
            let k = OperatorKernel::square(grid, values, w[..n].to_vec()).unwrap();
            let p = LebesgueExponent::new(p).unwrap();
            let upper = interpolated_norm(l2_operator_norm(&k).unwrap(), kernel_sup_norm(&k), &p);
            let lower = test_pair_lower_bound(&k, &p, 8);
            prop_assert!(lower <= upper * (1.0 + 1e-9), "{} > {}", lower, upper);
            Ok(())
        })
        .map_err(|e| e.to_string())
    });
    property(&mut v, "byte-identical CLI results for equal seeds", 3, |r| {
        let cfg = default_config("free-kernels").unwrap();
        r.run(&(0u64..1_000_000), |seed| {
            let mut csv = Vec::new();
            for tag in ["a", "b"] {
                let dir = scratch(&format!("determinism-{seed}-{tag}"));
                let opts = RunOptions { output_dir: Some(dir.clone()), seed: Some(seed), plot: false, strict: false };
                run(&cfg, &opts).unwrap();
                csv.push(fs::read(dir.join("results.csv")).unwrap());
            }
            prop_assert_eq!(&csv[0], &csv[1]);
            Ok(())
        })
        .map_err(|e| e.to_string())
    });
    v
}

fn random_matrix(n: usize, seed: &[f64]) -> DMatrix<Complex64> {
    DMatrix::from_fn(n, n, |i, j| Complex64::new(seed[2 * (i * n + j)], seed[2 * (i * n + j) + 1]))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 11] = [
        ("free-kernel exactness", free_kernel_exactness),
        ("degeneracy V = 0", degeneracy),
        ("free weighted decay", free_decay),
        ("Birman-Schwinger decay and inverse bound", birman_schwinger),
        ("free resolvent epsilon-exponents", free_epsilon_exponents),
        ("perturbed resolvent epsilon-exponents", perturbed_epsilon_exponents),
        ("Hoelder regularity of the spectral density", holder),
        ("frequency-window estimate", window),
        ("perturbed weighted decay", main_decay),
        ("cone-interior decay", appendix),
        ("structural invariants", structural),
    ];
    let mut failed = 0;
    let mut summary = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = f();
        let secs = start.elapsed().as_secs_f64();
        let line = format!("criterion {:>2} {}: {name} ({secs:.1} s)", i + 1, if v.passed { "PASS" } else { "FAIL" });
        println!("{line}");
        for l in &v.lines {
            println!("    {l}");
        }
        if !v.passed {
            failed += 1;
        }
        summary.push(line);
    }
    println!("\nacceptance summary");
    for l in &summary {
        println!("{l}");
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
