//! `run` and `suite`.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::coverage::{coverage_table, render, CoverageRow, RunResult};
use crate::error::{CliError, CliResult, EXIT_PASS};
use crate::experiments::{execute, ExperimentKind};
use crate::report::{status_of, write_artifacts, Outcome, Status};

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub plot: bool,
    pub strict: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { output_dir: None, seed: None, plot: true, strict: false }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub outcome: Outcome,
    pub status: Status,
    pub files: Vec<PathBuf>,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        self.status.exit_code()
    }
}

/// Command-line overrides applied to a loaded config.
pub fn with_options(cfg: &ExperimentConfig, opts: &RunOptions) -> ExperimentConfig {
    let mut c = cfg.clone();
    if let Some(d) = &opts.output_dir {
        c.output_dir = d.clone();
    }
    if let Some(s) = opts.seed {
        c.seed = s;
    }
    c
}

/// Runs one experiment and writes its artifacts into `output_dir`.
pub fn run(cfg: &ExperimentConfig, opts: &RunOptions) -> CliResult<RunReport> {
    let cfg = with_options(cfg, opts);
    let outcome = execute(&cfg)?;
    let status = status_of(&outcome, opts.strict);
    let files = write_artifacts(&cfg.output_dir, &cfg, &outcome, status, opts.strict, opts.plot)?;
    Ok(RunReport { config: cfg, outcome, status, files })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    configs: Vec<PathBuf>,
}

/// A manifest entry: a label for the output directory and the config.
pub type ManifestEntry = (String, ExperimentConfig);

fn label_of(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "config".into())
}

/// Parses a manifest (`configs = [paths]`, relative to the manifest itself).
pub fn load_manifest(path: &Path) -> CliResult<Vec<ManifestEntry>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let raw: RawManifest = toml::from_str(&text).map_err(|e| CliError::usage("manifest", e.message().to_string()))?;
    if raw.configs.is_empty() {
        return Err(CliError::usage("manifest.configs", "the manifest lists no configs"));
    }
    let base = path.parent().unwrap_or(Path::new("."));
    raw.configs
        .iter()
        .map(|p| {
            let full = base.join(p);
            let cfg = ExperimentConfig::load(&full).map_err(|e| match e {
                CliError::Usage { field, reason } => CliError::usage(field, format!("{}: {reason}", full.display())),
                other => other,
            })?;
            Ok((label_of(p), cfg))
        })
        .collect()
}

/// The configs shipped with the crate, in manifest order.
pub const DEFAULT_CONFIGS: &[(&str, &str)] = &[
    ("free-kernels", include_str!("../configs/free-kernels.toml")),
    ("bound-integrals", include_str!("../configs/bound-integrals.toml")),
    ("resolvent-estimates", include_str!("../configs/resolvent-estimates.toml")),
    ("birman-schwinger", include_str!("../configs/birman-schwinger.toml")),
    ("holder", include_str!("../configs/holder.toml")),
    ("window", include_str!("../configs/window.toml")),
    ("free-decay", include_str!("../configs/free-decay.toml")),
    ("free-decay-unweighted", include_str!("../configs/free-decay-unweighted.toml")),
    ("perturbed-decay", include_str!("../configs/perturbed-decay.toml")),
    ("appendix", include_str!("../configs/appendix.toml")),
];

pub fn default_manifest() -> Vec<ManifestEntry> {
    DEFAULT_CONFIGS
        .iter()
        .map(|(label, text)| (label.to_string(), ExperimentConfig::from_toml_str(text).expect("shipped configs are valid")))
        .collect()
}

/// A shipped config by label.
pub fn default_config(label: &str) -> Option<ExperimentConfig> {
    default_manifest().into_iter().find(|(l, _)| l == label).map(|(_, c)| c)
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteRun {
    pub label: String,
    pub experiment: ExperimentKind,
    pub output_dir: PathBuf,
    pub status: Option<Status>,
    pub exit_code: i32,
    pub error: Option<String>,
    #[serde(skip)]
    pub result: RunResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub runs: Vec<SuiteRun>,
    pub coverage: Vec<CoverageRow>,
    pub exit_code: i32,
}

/// Runs every entry (concurrently), each into `<output_dir>/<label>`, and
/// writes `suite.json` and `coverage.txt`. Failures are recorded, not fatal.
pub fn suite(entries: &[ManifestEntry], opts: &RunOptions) -> CliResult<SuiteReport> {
    if entries.is_empty() {
        return Err(CliError::usage("manifest", "the manifest lists no configs"));
    }
    let base = opts.output_dir.clone().unwrap_or_else(|| PathBuf::from("out").join("suite"));
    let runs: Vec<SuiteRun> = entries
        .par_iter()
        .map(|(label, cfg)| {
            let dir = base.join(label);
            let run_opts = RunOptions { output_dir: Some(dir.clone()), ..opts.clone() };
            match run(cfg, &run_opts) {
                Ok(rep) => SuiteRun {
                    label: label.clone(),
                    experiment: cfg.experiment,
                    output_dir: dir,
                    status: Some(rep.status),
                    exit_code: rep.exit_code(),
                    error: None,
                    result: RunResult { experiment: cfg.experiment, checks: rep.outcome.checks, error: None },
                },
                Err(e) => SuiteRun {
                    label: label.clone(),
                    experiment: cfg.experiment,
                    output_dir: dir,
                    status: None,
                    exit_code: e.exit_code(),
                    error: Some(e.to_string()),
                    result: RunResult { experiment: cfg.experiment, checks: Vec::new(), error: Some(e.to_string()) },
                },
            }
        })
        .collect();
    let results: Vec<RunResult> = runs.iter().map(|r| r.result.clone()).collect();
    let coverage = coverage_table(&results);
    let exit_code = runs.iter().map(|r| r.exit_code).max().unwrap_or(EXIT_PASS);
    let report = SuiteReport { runs, coverage, exit_code };
    fs::create_dir_all(&base).map_err(|e| CliError::io(&base, e))?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Output { what: "suite.json".into(), reason: e.to_string() })?;
    let p = base.join("suite.json");
    fs::write(&p, json + "\n").map_err(|e| CliError::io(&p, e))?;
    let p = base.join("coverage.txt");
    fs::write(&p, render(&report.coverage)).map_err(|e| CliError::io(&p, e))?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::REQUIRED;

    #[test]
    fn default_manifest_covers_required_estimates() {
        let kinds: Vec<ExperimentKind> = default_manifest().iter().map(|(_, c)| c.experiment).collect();
        for id in REQUIRED {
            assert!(kinds.iter().any(|k| k.estimates().contains(id)), "{id} not covered");
        }
        for k in ExperimentKind::ALL {
            assert!(kinds.contains(k), "{} missing", k.name());
        }
    }

    #[test]
    fn empty_manifest_is_usage_error() {
        let e = suite(&[], &RunOptions::default()).unwrap_err();
        assert_eq!(e.exit_code(), crate::error::EXIT_USAGE);
    }
}
