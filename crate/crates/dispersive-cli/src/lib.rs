//! Configuration-driven experiment runner: one TOML config describes one
//! experiment, whose results land in `results.csv`, `summary.json` and an
//! optional `plot.svg`.

pub mod config;
pub mod coverage;
pub mod error;
pub mod experiments;
pub mod plot;
pub mod report;
pub mod runner;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
pub use experiments::ExperimentKind;
pub use runner::{default_config, default_manifest, load_manifest, run, suite, RunOptions, RunReport, SuiteReport};
