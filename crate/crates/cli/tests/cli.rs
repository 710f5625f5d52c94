use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rollwave"))
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("rollwave-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).env_remove("ROLLWAVE_JOBS").output().unwrap()
}

fn error_json(o: &Output) -> serde_json::Value {
    let s = String::from_utf8_lossy(&o.stderr);
    serde_json::from_str(s.lines().last().unwrap_or("")).expect("error JSON on stderr")
}

#[test]
fn version() {
    let o = bin().arg("version").output().unwrap();
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn bad_froude_is_config_error() {
    let d = scratch("bad");
    let o = run(&["profile", "--froude", "-1"], &d);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error_json(&o)["error"], "config");
}

#[test]
fn unknown_flag_is_config_error() {
    let d = scratch("flag");
    let o = run(&["profile", "--frode", "2"], &d);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn empty_scan_grid() {
    let d = scratch("empty");
    let o = run(&["scan", "--f-start", "3", "--f-end", "2"], &d);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn missing_profile_file_is_io_error() {
    let d = scratch("io");
    let o = run(&["gauge", "--profile", "/nonexistent/wave.json"], &d);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error_json(&o)["error"], "io");
}

#[test]
fn profile_gauge_spectrum_evolve() {
    let d = scratch("chain");
    let o = run(&["profile", "--froude", "2.5", "--period", "10", "--n", "64"], &d);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let wave = d.join("profile.json");
    assert!(wave.exists() && d.join("profile.csv").exists());
    let w = wave.to_str().unwrap();

    let o = run(&["gauge", "--profile", w], &d);
    assert!(o.status.success());
    let s: serde_json::Value = serde_json::from_slice(&fs::read(d.join("summary.json")).unwrap()).unwrap();
    assert!(s["coercivity_min"].as_f64().unwrap() > 0.0);

    let o = run(&["spectrum", "--profile", w, "--xi-points", "8", "--modes", "24"], &d);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(d.join("spectrum.csv").exists() && d.join("stability.json").exists());

    let o = run(&["evolve", "--linear", "--profile", w, "--t", "0.2"], &d);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let head = fs::read_to_string(d.join("trace.csv")).unwrap();
    assert!(head.starts_with("t,E,L2,H1,H2"));
}

#[test]
fn config_file_merges_with_flags() {
    let d = scratch("cfg");
    let cfg = d.join("scan.json");
    fs::write(&cfg, r#"{"f_start": 2.2, "f_end": 2.4, "f_step": 0.1, "n": 64, "periods": [10.0]}"#).unwrap();
    let c = cfg.to_str().unwrap();
    let o = run(&["scan", "--config", c, "--f-end", "2.3"], &d);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = fs::read_to_string(d.join("scan.csv")).unwrap();
    assert_eq!(rows.lines().count(), 3);
    // same config, same bytes
    let first = rows.clone();
    let o = run(&["scan", "--config", c, "--f-end", "2.3", "--jobs", "1"], &d);
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(d.join("scan.csv")).unwrap(), first);
}

#[test]
fn shock_run() {
    let d = scratch("shock");
    let o = run(&["shock", "--n", "401", "--t", "1"], &d);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s: serde_json::Value = serde_json::from_slice(&fs::read(d.join("summary.json")).unwrap()).unwrap();
    assert!(s["eta"].as_f64().unwrap() > 0.0);
    assert_eq!(s["violations"], 0);
}
