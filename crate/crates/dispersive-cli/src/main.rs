use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dispersive_cli::coverage::render;
use dispersive_cli::error::EXIT_USAGE;
use dispersive_cli::{default_manifest, load_manifest, run, suite, CliError, ExperimentConfig, ExperimentKind, RunOptions};

#[derive(Parser)]
#[command(name = "dispersive", version, about = "Numerical experiments on weighted dispersive estimates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Directory for artifacts (overrides the config).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Seed for randomized sampling (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write plot.svg (default).
    #[arg(long, global = true, overrides_with = "no_plot")]
    plot: bool,
    #[arg(long, global = true)]
    no_plot: bool,
    /// Treat tripped accuracy guards as failures.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config.
    Run { config: PathBuf },
    /// Run every config of a manifest; `default` selects the shipped one.
    Suite { manifest: String },
    /// List experiment names and the estimates they target.
    ListExperiments,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    let code = match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

fn dispatch(cli: &Cli) -> Result<i32, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::usage("--threads", "must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage("--threads", e.to_string()))?;
    }
    let opts = RunOptions { output_dir: cli.output_dir.clone(), seed: cli.seed, plot: !cli.no_plot, strict: cli.strict };
    match &cli.command {
        Command::ListExperiments => {
            for k in ExperimentKind::ALL {
                println!("{:<28} {}", k.name(), k.description());
                println!("{:<28} targets: {}", "", k.estimates().join(", "));
            }
            Ok(0)
        }
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(config)?;
            let rep = run(&cfg, &opts)?;
            for c in &rep.outcome.checks {
                let verdict = if c.passed { "PASS" } else { "FAIL" };
                let rel = match c.relation {
                    dispersive_cli::report::Relation::AtLeast => ">=",
                    dispersive_cli::report::Relation::AtMost => "<=",
                };
                println!("{verdict} [{}] {}: {} {rel} {}", c.estimate, c.name, c.measured, c.threshold);
            }
            for w in &rep.outcome.warnings {
                println!("warning: {w}");
            }
            for f in &rep.files {
                println!("wrote {}", f.display());
            }
            Ok(rep.exit_code())
        }
        Command::Suite { manifest } => {
            let entries = if manifest == "default" { default_manifest() } else { load_manifest(manifest.as_ref())? };
            let rep = suite(&entries, &opts)?;
            for r in &rep.runs {
                let status = match (&r.status, &r.error) {
                    (Some(s), _) => format!("{s:?}").to_lowercase(),
                    (None, Some(e)) => format!("error: {e}"),
                    (None, None) => "unknown".into(),
                };
                println!("{:<24} {:<28} {status}", r.label, r.experiment.name());
            }
            print!("{}", render(&rep.coverage));
            Ok(rep.exit_code)
        }
    }
}
