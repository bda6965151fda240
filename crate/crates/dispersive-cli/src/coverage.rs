//! Catalog of the estimates the experiments target, and the coverage table
//! built from a suite run.

use serde::Serialize;

use crate::experiments::ExperimentKind;
use crate::report::Check;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    /// Measured by slope or bound checks.
    Measured,
    /// An identity used by the computational route, checked to round-off.
    Identity,
    /// Left out on purpose.
    Excluded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Estimate {
    pub id: &'static str,
    pub statement: &'static str,
    pub scope: Scope,
}

const fn measured(id: &'static str, statement: &'static str) -> Estimate {
    Estimate { id, statement, scope: Scope::Measured }
}

pub const CATALOG: &[Estimate] = &[
    measured("free-weighted-decay", "weighted free propagator: |t|^{-alpha(1+sigma)} for sigma >= 0"),
    measured("perturbed-weighted-decay", "weighted perturbed propagator: (|t|^{-1-sigma} log(1+|t|))^alpha for 0 < sigma < delta0"),
    measured("perturbed-decay-limited-by-potential", "weighted perturbed propagator: |t|^{-alpha(1+delta0-)} for sigma >= delta0"),
    measured("free-resolvent-frequency-decay", "<x>^{-s1} R0 <x>^{-s1}: lambda^{-1}"),
    measured("free-resolvent-absorption-blowup", "<x>^{-s} R0 <x>^{-s1}: lambda^{-1} epsilon^{-max(1/2 - s, 0)}"),
    Estimate {
        id: "free-resolvent-derivative-kernels",
        statement: "kernel of d^k R0 / d lambda^k is (+-i)^k |x-y|^{k-1} e^{(+-i lambda - epsilon)|x-y|} / 4 pi",
        scope: Scope::Identity,
    },
    measured("free-weighted-sup-integral-a", "sup_x of the first radial bound integral: epsilon^{-max(1 - 2s, 0)}"),
    measured("free-weighted-sup-integral-b", "sup_x of the derivative bound integral: epsilon^{-2 + 2 min(sigma, s + 1/2)}"),
    measured("perturbed-resolvent-frequency-decay", "<x>^{-s} R <x>^{-s1}: lambda^{-1} epsilon^{-max(1/2 - s, 0)}"),
    measured("perturbed-resolvent-derivative-bound", "<x>^{-k-s} R^(k) <x>^{-k-s1}, k <= k0 + 1: epsilon^{-max(1/2 - s, 0)}"),
    measured("perturbed-resolvent-top-derivative-blowup", "<x>^{-k0-2-s} R^(k0+2) <x>^{-k0-2-s}: epsilon^{-1 + min(s + 1/2, delta0')}"),
    measured("birman-schwinger-decay", "K0 = <x>^{s1} V R0 <x>^{-s1}: norm lambda^{-1}"),
    measured("birman-schwinger-inverse-bound", "(1 + K0)^{-1} bounded uniformly in lambda >= lambda0"),
    measured("spectral-density-derivative-bound", "d^j T(lambda) bounded L1 -> Linf for j <= j0 + 1"),
    measured("spectral-density-holder", "d^{j0+1} T Hoelder continuous of order sigma'"),
    measured("frequency-window-estimate", "frequency window at scale A: |t|^{2/p} A^{-2/p}"),
    Estimate { id: "cutoff-decomposition", statement: "chi_a = psi_{a,A} + eta_A", scope: Scope::Identity },
    measured("cone-interior-decay", "free kernel inside |x|, |y| <= |t|/4: O(|t|^{-N}) for every N"),
    Estimate {
        id: "polar-commutator-identity",
        statement: "commutator identity for the radial derivative used in the resolvent proofs",
        scope: Scope::Excluded,
    },
    Estimate {
        id: "conjugated-operator-manipulations",
        statement: "conjugation of the resolvent derivatives by weights inside the perturbation argument",
        scope: Scope::Excluded,
    },
    Estimate {
        id: "mollified-spectral-density",
        statement: "mollified spectral density and its convolution bounds in the Hoelder proof",
        scope: Scope::Excluded,
    },
];

/// Estimates the default manifest must exercise.
pub const REQUIRED: &[&str] = &[
    "free-weighted-decay",
    "perturbed-weighted-decay",
    "perturbed-decay-limited-by-potential",
    "free-resolvent-frequency-decay",
    "free-resolvent-absorption-blowup",
    "free-weighted-sup-integral-a",
    "free-weighted-sup-integral-b",
    "perturbed-resolvent-frequency-decay",
    "perturbed-resolvent-derivative-bound",
    "perturbed-resolvent-top-derivative-blowup",
    "birman-schwinger-decay",
    "birman-schwinger-inverse-bound",
    "spectral-density-derivative-bound",
    "spectral-density-holder",
    "frequency-window-estimate",
    "cone-interior-decay",
];

pub fn lookup(id: &str) -> Option<&'static Estimate> {
    CATALOG.iter().find(|e| e.id == id)
}

/// What one experiment run contributed to the table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub experiment: ExperimentKind,
    pub checks: Vec<Check>,
    /// Set when the run aborted before producing checks.
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageStatus {
    Pass,
    Fail,
    Error,
    NotRun,
    ExcludedByDesign,
}

impl CoverageStatus {
    pub fn label(self) -> &'static str {
        match self {
            CoverageStatus::Pass => "pass",
            CoverageStatus::Fail => "fail",
            CoverageStatus::Error => "error",
            CoverageStatus::NotRun => "not run",
            CoverageStatus::ExcludedByDesign => "excluded by design",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageRow {
    pub id: &'static str,
    pub statement: &'static str,
    pub experiments: Vec<&'static str>,
    pub checks_passed: usize,
    pub checks_total: usize,
    pub status: CoverageStatus,
}

pub fn coverage_table(runs: &[RunResult]) -> Vec<CoverageRow> {
    CATALOG
        .iter()
        .map(|e| {
            let relevant: Vec<&RunResult> = runs.iter().filter(|r| r.experiment.estimates().contains(&e.id)).collect();
            let checks: Vec<&Check> = relevant.iter().flat_map(|r| r.checks.iter()).filter(|c| c.estimate == e.id).collect();
            let passed = checks.iter().filter(|c| c.passed).count();
            let mut experiments: Vec<&'static str> = relevant.iter().map(|r| r.experiment.name()).collect();
            experiments.dedup();
            let status = if e.scope == Scope::Excluded {
                CoverageStatus::ExcludedByDesign
            } else if relevant.iter().any(|r| r.error.is_some()) {
                CoverageStatus::Error
            } else if checks.is_empty() {
                CoverageStatus::NotRun
            } else if passed == checks.len() {
                CoverageStatus::Pass
            } else {
                CoverageStatus::Fail
            };
            CoverageRow { id: e.id, statement: e.statement, experiments, checks_passed: passed, checks_total: checks.len(), status }
        })
        .collect()
}

/// Plain-text rendering of the table.
pub fn render(rows: &[CoverageRow]) -> String {
    let width = rows.iter().map(|r| r.id.len()).max().unwrap_or(10);
    let mut s = format!("{:<width$}  {:<18}  {:>7}  experiments\n", "estimate", "status", "checks");
    for r in rows {
        let checks = if r.status == CoverageStatus::ExcludedByDesign { "-".to_string() } else { format!("{}/{}", r.checks_passed, r.checks_total) };
        s.push_str(&format!("{:<width$}  {:<18}  {:>7}  {}\n", r.id, r.status.label(), checks, r.experiments.join(", ")));
    }
    s
}
