//! Experiment configuration: one TOML file describes one experiment.
//!
//! Sections `potential`, `mesh`, `weights`, `exponent` and `cutoff` map onto
//! the library types; `sweep`, `numerics` and `tolerances` are flat tables
//! whose admissible keys depend on the experiment.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use dispersive::free_resolvent::{CutoffKind, CutoffSpec, LebesgueExponent, WeightParams};
use dispersive::lippmann_schwinger::{MeshParams, PotentialFamily, PotentialSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::experiments::{Defaults, ExperimentKind};

pub const DEFAULT_SEED: u64 = 20_240_611;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: String,
    seed: Option<i64>,
    output_dir: Option<PathBuf>,
    potential: Option<RawPotential>,
    mesh: Option<RawMesh>,
    weights: Option<RawWeights>,
    exponent: Option<RawExponent>,
    cutoff: Option<RawCutoff>,
    #[serde(default)]
    sweep: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    numerics: BTreeMap<String, f64>,
    #[serde(default)]
    tolerances: BTreeMap<String, f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPotential {
    family: String,
    amplitude: Option<f64>,
    delta0: Option<f64>,
    scale: Option<f64>,
    radial: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMesh {
    r_trunc: f64,
    n_r: i64,
    n_angular: i64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWeights {
    sigma: Option<f64>,
    s: Option<f64>,
    s1: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExponent {
    p: toml::Value,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCutoff {
    kind: Option<String>,
    a: Option<f64>,
    #[serde(rename = "A")]
    big_a: Option<f64>,
    smoothness_width: Option<f64>,
    order: Option<i64>,
}

/// A validated experiment description with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub potential: PotentialSpec,
    /// Quadrature mesh; when absent, radial potentials use the partial-wave backend.
    pub mesh: Option<MeshParams>,
    pub weights: WeightParams,
    pub exponent: LebesgueExponent,
    pub cutoff: CutoffSpec,
    pub sweep: BTreeMap<String, Vec<f64>>,
    pub numerics: BTreeMap<String, f64>,
    pub tolerances: BTreeMap<String, f64>,
}

fn lib_err(section: &str) -> impl Fn(dispersive::Error) -> CliError + '_ {
    move |e| CliError::from_library("config", section, e)
}

fn parse_family(name: &str) -> CliResult<PotentialFamily> {
    Ok(match name {
        "inverse_power" => PotentialFamily::InversePower,
        "gaussian" => PotentialFamily::Gaussian,
        "compact_bump" => PotentialFamily::CompactBump,
        "zero" => PotentialFamily::Zero,
        other => {
            return Err(CliError::usage(
                "potential.family",
                format!("unknown family `{other}`; expected inverse_power, gaussian, compact_bump or zero"),
            ))
        }
    })
}

fn parse_kind(name: &str) -> CliResult<CutoffKind> {
    Ok(match name {
        "chi" | "chi_a" => CutoffKind::ChiA,
        "psi" | "psi_a_a" => CutoffKind::PsiAA,
        "phi" | "phi_window" => CutoffKind::PhiWindow,
        "eta" | "eta_a" => CutoffKind::EtaA,
        other => {
            return Err(CliError::usage(
                "cutoff.kind",
                format!("unknown kind `{other}`; expected chi_a, psi_a_a, phi_window or eta_a"),
            ))
        }
    })
}

fn parse_p(v: &toml::Value) -> CliResult<f64> {
    match v {
        toml::Value::Float(x) => Ok(*x),
        toml::Value::Integer(i) => Ok(*i as f64),
        toml::Value::String(s) if matches!(s.as_str(), "inf" | "infinity") => Ok(f64::INFINITY),
        other => Err(CliError::usage("exponent.p", format!("expected a number or \"inf\", got {other}"))),
    }
}

fn build_potential(raw: Option<RawPotential>, default: PotentialSpec) -> CliResult<PotentialSpec> {
    let Some(raw) = raw else { return Ok(default) };
    let family = parse_family(&raw.family)?;
    let amplitude = raw.amplitude.unwrap_or(if family == PotentialFamily::Zero { 0.0 } else { 1.0 });
    if family == PotentialFamily::Zero && amplitude != 0.0 {
        return Err(CliError::usage("potential.amplitude", "the zero family has amplitude 0"));
    }
    let delta0 = raw.delta0.unwrap_or(1.0);
    let scale = raw.scale.unwrap_or(1.0);
    let radial = raw.radial.unwrap_or(true);
    let v = PotentialSpec::new(family, amplitude, delta0, radial, scale).map_err(lib_err("potential"))?;
    Ok(v)
}

fn build_mesh(raw: Option<RawMesh>) -> CliResult<Option<MeshParams>> {
    let Some(m) = raw else { return Ok(None) };
    if !(m.r_trunc > 0.0 && m.r_trunc.is_finite()) {
        return Err(CliError::usage("mesh.r_trunc", format!("must be positive, got {}", m.r_trunc)));
    }
    if m.n_r < 1 {
        return Err(CliError::usage("mesh.n_r", format!("must be at least 1, got {}", m.n_r)));
    }
    if m.n_angular < 6 {
        return Err(CliError::usage("mesh.n_angular", format!("must be at least 6, got {}", m.n_angular)));
    }
    Ok(Some(MeshParams { r_trunc: m.r_trunc, n_r: m.n_r as usize, n_angular: m.n_angular as usize }))
}

fn build_cutoff(raw: Option<RawCutoff>, default: CutoffSpec) -> CliResult<CutoffSpec> {
    let Some(raw) = raw else { return Ok(default) };
    let mut c = default;
    if let Some(k) = &raw.kind {
        c.kind = parse_kind(k)?;
        if c.kind == CutoffKind::ChiA {
            c.big_a = f64::INFINITY;
        }
    }
    if let Some(a) = raw.a {
        c.a = a;
    }
    if let Some(a) = raw.big_a {
        c.big_a = a;
    }
    if let Some(w) = raw.smoothness_width {
        c.smoothness_width = w;
    }
    if let Some(o) = raw.order {
        if o < 0 {
            return Err(CliError::usage("cutoff.order", "must be positive"));
        }
        c.order = o as u32;
    }
    c.validated().map_err(lib_err("cutoff"))
}

/// Overlays `given` on `defaults`, refusing keys the experiment does not read.
fn merge<T: Clone>(section: &str, defaults: &BTreeMap<String, T>, given: BTreeMap<String, T>) -> CliResult<BTreeMap<String, T>> {
    let mut out = defaults.clone();
    for (k, v) in given {
        if !defaults.contains_key(&k) {
            let known: Vec<&str> = defaults.keys().map(String::as_str).collect();
            return Err(CliError::usage(
                format!("{section}.{k}"),
                format!("not used by this experiment (known keys: {})", known.join(", ")),
            ));
        }
        out.insert(k, v);
    }
    Ok(out)
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> CliResult<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let field = e
                .span()
                .map(|s| locate_key(text, s.start))
                .filter(|f| !f.is_empty())
                .unwrap_or_else(|| "config".to_string());
            CliError::usage(field, msg)
        })?;
        Self::from_raw(raw)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        // an unreadable config is the caller's mistake, not a numerical failure
        let text = fs::read_to_string(path).map_err(|e| CliError::usage("config", format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// The built-in defaults of `kind`.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let text = format!("experiment = \"{}\"\n", kind.name());
        Self::from_toml_str(&text).expect("defaults are valid")
    }

    fn from_raw(raw: RawConfig) -> CliResult<Self> {
        let experiment = ExperimentKind::from_name(&raw.experiment).ok_or_else(|| {
            let names: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
            CliError::usage("experiment", format!("unknown experiment `{}`; expected one of {}", raw.experiment, names.join(", ")))
        })?;
        let d: Defaults = experiment.defaults();
        let seed = match raw.seed {
            None => DEFAULT_SEED,
            Some(s) if s >= 0 => s as u64,
            Some(s) => return Err(CliError::usage("seed", format!("must be non-negative, got {s}"))),
        };
        let potential = build_potential(raw.potential, d.potential)?;
        let mesh = build_mesh(raw.mesh)?;
        let (mut sigma, mut s, mut s1) = d.weights;
        if let Some(w) = raw.weights {
            sigma = w.sigma.unwrap_or(sigma);
            s = w.s.unwrap_or(s);
            s1 = w.s1.unwrap_or(s1);
        }
        let weights = WeightParams::new(sigma, s, s1).map_err(lib_err("weights"))?;
        let p = match raw.exponent {
            Some(e) => parse_p(&e.p)?,
            None => d.p,
        };
        let exponent = LebesgueExponent::new(p).map_err(lib_err("exponent"))?;
        let cutoff = build_cutoff(raw.cutoff, d.cutoff)?;
        let sweep = merge("sweep", &d.sweep, raw.sweep)?;
        for (k, v) in &sweep {
            if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
                return Err(CliError::usage(format!("sweep.{k}"), "must be a nonempty list of finite numbers"));
            }
        }
        let numerics = merge("numerics", &d.numerics, raw.numerics)?;
        for (k, v) in &numerics {
            if !v.is_finite() {
                return Err(CliError::usage(format!("numerics.{k}"), "must be finite"));
            }
        }
        let tolerances = merge("tolerances", &d.tolerances, raw.tolerances)?;
        for (k, v) in &tolerances {
            if !(*v >= 0.0) || !v.is_finite() {
                return Err(CliError::usage(format!("tolerances.{k}"), format!("must be finite and >= 0, got {v}")));
            }
        }
        let output_dir = raw.output_dir.unwrap_or_else(|| PathBuf::from("out").join(experiment.name()));
        let cfg = Self { experiment, seed, output_dir, potential, mesh, weights, exponent, cutoff, sweep, numerics, tolerances };
        experiment.validate(&cfg)?;
        Ok(cfg)
    }

    pub fn sweep(&self, key: &str) -> &[f64] {
        self.sweep.get(key).unwrap_or_else(|| panic!("sweep `{key}` has no default"))
    }

    pub fn num(&self, key: &str) -> f64 {
        *self.numerics.get(key).unwrap_or_else(|| panic!("numerics `{key}` has no default"))
    }

    pub fn tol(&self, key: &str) -> f64 {
        *self.tolerances.get(key).unwrap_or_else(|| panic!("tolerance `{key}` has no default"))
    }
}

/// Dotted path of the key whose value starts at or before `offset`, from the
/// nearest preceding table header and key.
fn locate_key(text: &str, offset: usize) -> String {
    let mut section = String::new();
    let mut key = String::new();
    let mut pos = 0;
    for line in text.split_inclusive('\n') {
        if pos > offset {
            break;
        }
        let t = line.trim();
        if t.starts_with('[') {
            section = t.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            key.clear();
        } else if let Some((k, _)) = t.split_once('=') {
            key = k.trim().trim_matches('"').to_string();
        }
        pos += line.len();
    }
    match (section.is_empty(), key.is_empty()) {
        (true, _) => key,
        (false, true) => section,
        (false, false) => format!("{section}.{key}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_for_every_experiment_validate() {
        for &k in ExperimentKind::ALL {
            let c = ExperimentConfig::defaults(k);
            assert_eq!(c.experiment, k);
        }
    }

    #[test]
    fn bad_s1_names_the_field() {
        let e = ExperimentConfig::from_toml_str("experiment = \"verify-free-decay\"\n[weights]\ns1 = 0.4\n").unwrap_err();
        match e {
            CliError::Usage { field, .. } => assert_eq!(field, "weights.s1"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn type_errors_point_at_the_key() {
        let e = ExperimentConfig::from_toml_str("experiment = \"verify-free-decay\"\n[weights]\nsigma = \"half\"\n").unwrap_err();
        match e {
            CliError::Usage { field, .. } => assert_eq!(field, "weights.sigma"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_refused() {
        let e = ExperimentConfig::from_toml_str("experiment = \"verify-free-decay\"\n[tolerances]\nbogus = 1.0\n").unwrap_err();
        assert!(matches!(e, CliError::Usage { ref field, .. } if field == "tolerances.bogus"), "{e:?}");
        let e = ExperimentConfig::from_toml_str("experiment = \"nope\"\n").unwrap_err();
        assert!(matches!(e, CliError::Usage { ref field, .. } if field == "experiment"));
        let e = ExperimentConfig::from_toml_str("experiment = \"verify-free-decay\"\ncolour = 1\n").unwrap_err();
        assert!(matches!(e, CliError::Usage { .. }));
    }

    #[test]
    fn overrides_apply() {
        let c = ExperimentConfig::from_toml_str(
            "experiment = \"verify-free-decay\"\nseed = 7\n[exponent]\np = \"inf\"\n[sweep]\nt = [5.0, 10.0, 20.0, 40.0]\n[potential]\nfamily = \"zero\"\n",
        )
        .unwrap();
        assert_eq!(c.seed, 7);
        assert!(c.exponent.p.is_infinite());
        assert_eq!(c.sweep("t").len(), 4);
    }
}
