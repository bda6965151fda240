//! The `dispersive` binary: exit codes, usage errors and reproducible output.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use dispersive_cli::{default_config, run, RunOptions};
use proptest::prelude::*;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dispersive"))
}

fn scratch(name: &str) -> PathBuf {
    let d = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run_bin(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

#[test]
fn same_seed_gives_identical_artifacts() {
    let dir = scratch("determinism");
    let cfg = configs().join("free-kernels.toml");
    let mut outputs = Vec::new();
    for tag in ["a", "b"] {
        let out = dir.join(tag);
        let o = run_bin(&["run", cfg.to_str().unwrap(), "--output-dir", out.to_str().unwrap(), "--seed", "7"]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push((fs::read(out.join("results.csv")).unwrap(), fs::read(out.join("summary.json")).unwrap()));
    }
    assert_eq!(outputs[0].0, outputs[1].0);
    let strip = |b: &[u8]| String::from_utf8_lossy(b).replace(dir.join("a").to_str().unwrap(), "").replace(dir.join("b").to_str().unwrap(), "");
    assert_eq!(strip(&outputs[0].1), strip(&outputs[1].1));
}

#[test]
fn invalid_weight_is_a_usage_error_naming_the_field() {
    let dir = scratch("usage");
    let cfg = dir.join("bad.toml");
    fs::write(&cfg, "experiment = \"verify-bound-integrals\"\n[weights]\nsigma = 0.5\ns = 0.25\ns1 = 0.4\n").unwrap();
    let o = run_bin(&["run", cfg.to_str().unwrap(), "--output-dir", dir.join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("weights.s1"), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn unknown_key_is_a_usage_error() {
    let dir = scratch("unknown");
    let cfg = dir.join("bad.toml");
    fs::write(&cfg, "experiment = \"verify-free-decay\"\n[numerics]\nwarp = 3.0\n").unwrap();
    let o = run_bin(&["run", cfg.to_str().unwrap(), "--output-dir", dir.join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("numerics.warp"));
}

#[test]
fn failed_check_exits_with_one() {
    let dir = scratch("fail");
    // asks for t^-10 inside the cone; the measured slope is near -4
    let text = fs::read_to_string(configs().join("appendix.toml")).unwrap().replace("order = 3", "order = 10");
    let cfg = dir.join("strict.toml");
    fs::write(&cfg, text).unwrap();
    let o = run_bin(&["run", cfg.to_str().unwrap(), "--output-dir", dir.join("out").to_str().unwrap(), "--no-plot"]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}

#[test]
fn passing_run_writes_artifacts() {
    let dir = scratch("pass");
    let cfg = configs().join("free-decay.toml");
    let o = run_bin(&["run", cfg.to_str().unwrap(), "--output-dir", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let csv = fs::read_to_string(dir.join("results.csv")).unwrap();
    assert!(csv.lines().next().unwrap().starts_with("series,t [time]"), "{csv}");
    assert!(dir.join("summary.json").exists());
    assert!(fs::read_to_string(dir.join("plot.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn missing_config_is_a_usage_error() {
    let o = run_bin(&["run", "/nonexistent/config.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn lists_every_experiment() {
    let o = run_bin(&["list-experiments"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    for name in ["verify-free-kernels", "verify-window", "verify-perturbed-decay", "appendix-check"] {
        assert!(text.contains(name), "{name}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn library_runs_are_reproducible(seed in 0u64..1_000_000) {
        let cfg = default_config("free-kernels").unwrap();
        let base = scratch(&format!("prop-{seed}"));
        let mut csv = Vec::new();
        for tag in ["a", "b"] {
            let opts = RunOptions { output_dir: Some(base.join(tag)), seed: Some(seed), plot: false, strict: false };
            let rep = run(&cfg, &opts).unwrap();
            prop_assert_eq!(rep.exit_code(), 0);
            csv.push(fs::read(base.join(tag).join("results.csv")).unwrap());
        }
        prop_assert_eq!(&csv[0], &csv[1]);
    }
}
