use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use phenolv::output::{read_manifest, FailureRecord, FAILURE_FILE, MANIFEST_FILE};
use phenolv::presets::preset;
use tempfile::TempDir;

fn phenolv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phenolv")).args(args).output().unwrap()
}

fn run_config(command: &str, text: &str, tmp: &TempDir, tag: &str) -> (Output, std::path::PathBuf) {
    let cfg = tmp.path().join(format!("{tag}.toml"));
    fs::write(&cfg, text).unwrap();
    let out = tmp.path().join(tag);
    let o = phenolv(&[command, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    (o, out)
}

fn failure(dir: &Path) -> FailureRecord {
    serde_json::from_str(&fs::read_to_string(dir.join(FAILURE_FILE)).unwrap()).unwrap()
}

/// The sweep preset with `[sweep] values` replaced and a shorter horizon.
fn sweep_text(values: &str) -> String {
    preset("sweep-c")
        .unwrap()
        .replace("t_end = 300.0", "t_end = 100.0")
        .replace("values = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]", &format!("values = {values}"))
}

#[test]
fn successful_run_exits_zero_with_manifest() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("lv");
    let o = phenolv(&["phase-plane", "--preset", "lv-coexistence", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let m = read_manifest(&out).unwrap();
    assert_eq!(m.status, "ok");
    assert_eq!(m.command, "phase-plane");
    for f in &m.files {
        assert!(out.join(&f.name).exists());
    }
    assert!(!out.join(FAILURE_FILE).exists());
}

#[test]
fn invalid_parameter_exits_one_without_manifest() {
    let tmp = TempDir::new().unwrap();
    let text = preset("ode-coexistence").unwrap().replace("b = 0.5", "b = -1.0");
    let (o, out) = run_config("ode-sim", &text, &tmp, "bad");
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("params.b"));
    assert!(!out.join(MANIFEST_FILE).exists());
    let f = failure(&out);
    assert_eq!(f.kind, "validation");
    assert!(f.error_chain.iter().any(|e| e.contains("params.b")));
}

#[test]
fn command_mismatch_is_a_validation_error() {
    let tmp = TempDir::new().unwrap();
    let (o, _) = run_config("pde-sim", preset("ode-coexistence").unwrap(), &tmp, "mismatch");
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn inadmissible_steady_state_exits_two() {
    let tmp = TempDir::new().unwrap();
    // m far below d: the v component of the steady pair goes negative
    let text = preset("steady-coexistence")
        .unwrap()
        .replacen("base = 2.0\namplitude = 1.0\ncenter = 1.0", "base = 0.5\namplitude = 1.0\ncenter = 1.0", 1);
    let (o, out) = run_config("steady-state", &text, &tmp, "inadmissible");
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.join(MANIFEST_FILE).exists());
    let f = failure(&out);
    assert_eq!(f.kind, "runtime");
    assert!(f.config.is_some());
}

#[test]
fn stale_manifest_is_removed_on_failure() {
    let tmp = TempDir::new().unwrap();
    let (o, out) = run_config("phase-plane", preset("lv-coexistence").unwrap(), &tmp, "reuse");
    assert_eq!(o.status.code(), Some(0));
    assert!(out.join(MANIFEST_FILE).exists());
    let bad = preset("lv-coexistence").unwrap().replace("[params]", "[params]\nbogus = 1");
    let (o, out) = run_config("phase-plane", &bad, &tmp, "reuse");
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.join(MANIFEST_FILE).exists());
    assert!(out.join(FAILURE_FILE).exists());
}

#[test]
fn usage_errors() {
    assert_eq!(phenolv(&["bogus"]).status.code(), Some(1));
    assert_eq!(phenolv(&["ode-sim"]).status.code(), Some(1));
    assert_eq!(phenolv(&["ode-sim", "--preset", "nope"]).status.code(), Some(1));
    assert_eq!(phenolv(&["--help"]).status.code(), Some(0));
}

#[test]
fn presets_listing_names_every_preset() {
    let o = phenolv(&["presets"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    for (name, _, _) in phenolv::presets::PRESETS {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
}

#[test]
fn sweep_outcome_flips_past_one_third() {
    let tmp = TempDir::new().unwrap();
    let (o, out) = run_config("sweep", &sweep_text("[0.3, 0.4]"), &tmp, "flip");
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(out.join("sweep_summary.csv")).unwrap();
    let predicted: Vec<&str> = summary.lines().skip(1).map(|l| l.split(',').nth(3).unwrap()).collect();
    assert_eq!(predicted, ["coexist", "u_wins"]);
    assert!(out.join("run_000").join(MANIFEST_FILE).exists());
    assert!(out.join("run_001").join(MANIFEST_FILE).exists());
}

#[test]
fn empty_sweep_writes_header_only() {
    let tmp = TempDir::new().unwrap();
    let (o, out) = run_config("sweep", &sweep_text("[]"), &tmp, "empty");
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(out.join("sweep_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1);
    assert!(!out.join("run_000").exists());
}

#[test]
fn single_value_sweep_matches_direct_run() {
    let tmp = TempDir::new().unwrap();
    let (o, swept) = run_config("sweep", &sweep_text("[0.4]"), &tmp, "single");
    assert_eq!(o.status.code(), Some(0));
    let text = sweep_text("[0.4]");
    let direct_text = text[..text.find("[sweep]").unwrap()]
        .replace("command = \"sweep\"", "command = \"ode-sim\"")
        .replace("c = 0.25", "c = 0.4");
    let (o, direct) = run_config("ode-sim", &direct_text, &tmp, "direct");
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let child = swept.join("run_000");
    let m = read_manifest(&direct).unwrap();
    assert_eq!(read_manifest(&child).unwrap().config, m.config);
    for f in &m.files {
        assert_eq!(fs::read(child.join(&f.name)).unwrap(), fs::read(direct.join(&f.name)).unwrap(), "{}", f.name);
    }
}

#[test]
fn failing_sweep_child_is_recorded() {
    let tmp = TempDir::new().unwrap();
    let (o, out) = run_config("sweep", &sweep_text("[0.4, -1.0]"), &tmp, "childfail");
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let m = read_manifest(&out).unwrap();
    assert_eq!(m.check("failed"), Some(1.0));
    assert!(out.join("run_001").join(FAILURE_FILE).exists());
    let summary = fs::read_to_string(out.join("sweep_summary.csv")).unwrap();
    assert!(summary.lines().nth(2).unwrap().split(',').nth(2) == Some("failed"));
}
