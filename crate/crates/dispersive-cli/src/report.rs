//! Experiment outcomes and their on-disk artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use dispersive::norm_estimation::DecayFit;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult, EXIT_CHECK_FAILURE, EXIT_NUMERICAL, EXIT_PASS};
use crate::plot::{render_svg, Plot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "<=")]
    AtMost,
}

/// One pass/fail comparison `measured ⋚ threshold`, where the threshold
/// already includes the tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub estimate: String,
    pub measured: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, estimate: &str, measured: f64, relation: Relation, threshold: f64, tolerance: f64) -> Self {
        let passed = match relation {
            Relation::AtLeast => measured >= threshold,
            Relation::AtMost => measured <= threshold,
        };
        Self {
            name: name.to_string(),
            estimate: estimate.to_string(),
            measured,
            relation,
            threshold,
            tolerance,
            passed,
            detail: String::new(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Column {
    pub name: String,
    pub unit: String,
}

impl Column {
    pub fn new(name: &str, unit: &str) -> Self {
        Self { name: name.into(), unit: unit.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub series: String,
    pub x: f64,
    pub values: Vec<f64>,
}

/// Raw sweep data; cells that do not apply to a series hold NaN.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub abscissa: Column,
    pub columns: Vec<Column>,
    pub rows: Vec<Row>,
}

impl Table {
    pub fn new(abscissa: Column, columns: Vec<Column>) -> Self {
        Self { abscissa, columns, rows: Vec::new() }
    }

    pub fn push(&mut self, series: &str, x: f64, values: Vec<f64>) {
        debug_assert_eq!(values.len(), self.columns.len());
        self.rows.push(Row { series: series.to_string(), x, values });
    }

    pub fn series(&self, name: &str) -> impl Iterator<Item = &Row> {
        let name = name.to_string();
        self.rows.iter().filter(move |r| r.series == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedFit {
    pub name: String,
    pub estimate: String,
    pub fit: DecayFit,
}

/// Everything an experiment produces before it is written out.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub table: Table,
    pub checks: Vec<Check>,
    pub fits: Vec<NamedFit>,
    pub notes: Vec<String>,
    /// Accuracy guards that tripped without aborting the run.
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub plot: Option<Plot>,
}

impl Outcome {
    pub fn new(table: Table) -> Self {
        Self { table, checks: Vec::new(), fits: Vec::new(), notes: Vec::new(), warnings: Vec::new(), plot: None }
    }

    pub fn fit(&mut self, name: &str, estimate: &str, fit: DecayFit) {
        self.fits.push(NamedFit { name: name.into(), estimate: estimate.into(), fit });
    }

    pub fn find_fit(&self, name: &str) -> Option<&DecayFit> {
        self.fits.iter().find(|f| f.name == name).map(|f| &f.fit)
    }

    pub fn find_check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Passed,
    Failed,
    /// Passed its checks but tripped accuracy guards under `--strict`.
    StrictFailure,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Passed => EXIT_PASS,
            Status::Failed => EXIT_CHECK_FAILURE,
            Status::StrictFailure => EXIT_NUMERICAL,
        }
    }
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    experiment: &'a str,
    estimates: Vec<&'a str>,
    status: Status,
    seed: u64,
    strict: bool,
    checks: &'a [Check],
    fits: &'a [NamedFit],
    notes: &'a [String],
    warnings: &'a [String],
    config: &'a ExperimentConfig,
}

pub fn status_of(outcome: &Outcome, strict: bool) -> Status {
    if !outcome.all_passed() {
        Status::Failed
    } else if strict && !outcome.warnings.is_empty() {
        Status::StrictFailure
    } else {
        Status::Passed
    }
}

/// Shortest decimal that round-trips to the same `f64`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x != 0.0 && (x.abs() < 1e-5 || x.abs() >= 1e16) {
        format!("{x:e}")
    } else {
        format!("{x:?}")
    }
}

fn header_cell(c: &Column) -> String {
    if c.unit.is_empty() {
        c.name.clone()
    } else {
        format!("{} [{}]", c.name, c.unit)
    }
}

pub fn csv_bytes(table: &Table) -> CliResult<Vec<u8>> {
    let out_err = |e: csv::Error| CliError::Output { what: "results.csv".into(), reason: e.to_string() };
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["series".to_string(), header_cell(&table.abscissa)];
    header.extend(table.columns.iter().map(header_cell));
    w.write_record(&header).map_err(out_err)?;
    for row in &table.rows {
        let mut rec = vec![row.series.clone(), format_float(row.x)];
        rec.extend(row.values.iter().map(|&v| format_float(v)));
        w.write_record(&rec).map_err(out_err)?;
    }
    w.into_inner().map_err(|e| CliError::Output { what: "results.csv".into(), reason: e.to_string() })
}

pub fn summary_json(cfg: &ExperimentConfig, outcome: &Outcome, status: Status, strict: bool) -> CliResult<String> {
    let s = Summary {
        experiment: cfg.experiment.name(),
        estimates: cfg.experiment.estimates().to_vec(),
        status,
        seed: cfg.seed,
        strict,
        checks: &outcome.checks,
        fits: &outcome.fits,
        notes: &outcome.notes,
        warnings: &outcome.warnings,
        config: cfg,
    };
    serde_json::to_string_pretty(&s).map_err(|e| CliError::Output { what: "summary.json".into(), reason: e.to_string() })
}

fn write(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Writes `results.csv`, `summary.json` and, when requested, `plot.svg`.
pub fn write_artifacts(
    dir: &Path,
    cfg: &ExperimentConfig,
    outcome: &Outcome,
    status: Status,
    strict: bool,
    plot: bool,
) -> CliResult<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut written = Vec::new();
    let csv_path = dir.join("results.csv");
    write(&csv_path, &csv_bytes(&outcome.table)?)?;
    written.push(csv_path);
    let json_path = dir.join("summary.json");
    let mut json = summary_json(cfg, outcome, status, strict)?;
    json.push('\n');
    write(&json_path, json.as_bytes())?;
    written.push(json_path);
    if plot {
        if let Some(p) = &outcome.plot {
            let svg_path = dir.join("plot.svg");
            write(&svg_path, render_svg(p).as_bytes())?;
            written.push(svg_path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, -2.5e17, 123456789.123456789] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_float(f64::NAN), "NaN");
    }

    #[test]
    fn csv_header_names_units() {
        let mut t = Table::new(Column::new("t", "time"), vec![Column::new("norm_sup", "L1->Linf"), Column::new("n", "")]);
        t.push("a", 2.0, vec![0.5, 1.0]);
        let s = String::from_utf8(csv_bytes(&t).unwrap()).unwrap();
        let mut lines = s.lines();
        assert_eq!(lines.next().unwrap(), "series,t [time],norm_sup [L1->Linf],n");
        assert_eq!(lines.next().unwrap(), "a,2.0,0.5,1.0");
    }

    #[test]
    fn check_relations() {
        assert!(Check::new("c", "e", 1.0, Relation::AtLeast, 0.5, 0.1).passed);
        assert!(!Check::new("c", "e", 1.0, Relation::AtMost, 0.5, 0.1).passed);
        assert!(!Check::new("c", "e", f64::NAN, Relation::AtMost, 0.5, 0.1).passed);
    }
}
