use std::path::Path;
use std::process::{Command, Output};

const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures/laflamme5_qubit.json");

fn cvqec(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvqec"))
        .args(args)
        .current_dir(dir)
        .env_remove("CVQEC_THREADS")
        .output()
        .unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn encode_inject_decode_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let enc = cvqec(d, &["encode", "--code", "repetition3", "--grid-n", "16", "--index", "8", "--out", "s0"]);
    assert!(enc.status.success());
    assert_eq!(json(&enc)["nonzero_amplitudes"], 1);
    let bytes = std::fs::read(d.join("s0.bin")).unwrap();
    // The single nonzero tuple (8, 8, 8) sits at flat index 8·256 + 8·16 + 8.
    let flat = 8 * 256 + 8 * 16 + 8;
    let re = f64::from_le_bytes(bytes[flat * 16..flat * 16 + 8].try_into().unwrap());
    assert!((re - 1.0).abs() < 1e-12);

    assert!(cvqec(d, &["inject", "--state", "s0", "--mode", "1", "--shift", "2", "--out", "s1"]).status.success());
    let dec = cvqec(d, &["decode", "--state", "s1", "--min-fidelity", "0.999999999", "--out", "s2"]);
    assert!(dec.status.success(), "{}", String::from_utf8_lossy(&dec.stderr));
    let report = json(&dec);
    assert!(report["post_correction_fidelity"].as_f64().unwrap() >= 1.0 - 1e-9);
    assert_eq!(report["applied"], serde_json::json!([1, 2, 0]));
    assert!(d.join("s2.bin").exists());
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(cvqec(d, &["encode", "--code", "steane7", "--out", "x"]).status.code(), Some(2));
    assert_eq!(cvqec(d, &["transpile", "--in", "missing.json", "--enumerate"]).status.code(), Some(2));
    assert_eq!(cvqec(d, &["decode", "--state", "missing"]).status.code(), Some(2));
    assert_eq!(cvqec(d, &["encode", "--code", "cv5", "--grid-n", "7", "--out", "x"]).status.code(), Some(2));
    assert_eq!(cvqec(d, &["bogus"]).status.code(), Some(2));
}

#[test]
fn cycle_reports_recovery_and_failed_checks() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ok = cvqec(
        d,
        &["cycle", "--code", "cv5", "--grid-n", "8", "--logical", "gaussian", "--mode", "3", "--shift", "-1", "--kick", "2", "--min-fidelity", "0.999999"],
    );
    assert!(ok.status.success());
    assert!(json(&ok)["post_correction_fidelity"].as_f64().unwrap() > 1.0 - 1e-9);
    let kicked = cvqec(
        d,
        &["cycle", "--code", "repetition3", "--logical", "gaussian", "--center", "2", "--kick", "3", "--min-fidelity", "0.99"],
    );
    assert_eq!(kicked.status.code(), Some(1));
}

#[test]
fn check_exits_by_correctability() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cv5 = cvqec(d, &["check", "--code", "cv5"]);
    assert!(cv5.status.success());
    assert_eq!(json(&cv5)["correctable"], true);
    assert_eq!(cvqec(d, &["check", "--code", "repetition3"]).status.code(), Some(1));
    assert!(cvqec(d, &["check", "--code", "repetition3", "--class", "position"]).status.success());
}

#[test]
fn transpile_enumeration_writes_verdicts_and_encoders() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = cvqec(d, &["transpile", "--in", FIXTURE, "--enumerate", "--grid-n", "8", "--out-dir", "cands"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(d.join("cands/verdicts.csv")).unwrap();
    assert_eq!(table.lines().count(), 17);
    let encoders = std::fs::read_dir(d.join("cands"))
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with("encoder_"))
        .count();
    assert_eq!(encoders, 12);
    let shipped = std::fs::read_to_string(d.join("cands/encoder_0000011.json")).unwrap();
    std::fs::write(d.join("cv5.json"), &shipped).unwrap();
    let check = cvqec(d, &["check", "--encoder", "cv5.json"]);
    assert!(check.status.success());

    let single = cvqec(d, &["transpile", "--in", FIXTURE, "--assignment", "0000011"]);
    assert!(single.status.success());
    assert_eq!(String::from_utf8(single.stdout).unwrap(), shipped);
    assert_eq!(cvqec(d, &["transpile", "--in", FIXTURE, "--assignment", "01"]).status.code(), Some(2));
}

const SWEEP: &str = r#"
code = "repetition3"
grid_n = 16
trials = 200
seed = 5

[logical]
kind = "two_peak"
peak_points = 2.0
width_points = 1.0

[error]
kind = "displacement"
mode = 0
shift_points = 5

[measurement]
sigmas_dx = [0.0, 1.0, 2.0]
"#;

#[test]
fn sweeps_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("sweep.toml"), SWEEP).unwrap();
    let one = cvqec(d, &["--threads", "1", "sweep", "--config", "sweep.toml"]);
    assert!(one.status.success());
    let two = Command::new(env!("CARGO_BIN_EXE_cvqec"))
        .args(["sweep", "--config", "sweep.toml", "--out", "s.csv", "--trial-out", "t.csv", "--plot-script", "plot.py"])
        .current_dir(d)
        .env("CVQEC_THREADS", "2")
        .output()
        .unwrap();
    assert!(two.status.success());
    assert_eq!(one.stdout, std::fs::read(d.join("s.csv")).unwrap());
    assert_eq!(std::fs::read_to_string(d.join("t.csv")).unwrap().lines().count(), 601);
    assert!(std::fs::read_to_string(d.join("plot.py")).unwrap().contains("s.csv"));
    let text = String::from_utf8(one.stdout).unwrap();
    let first: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert!(first[4].parse::<f64>().unwrap() >= 1.0 - 1e-6);
}

#[test]
fn bad_sweep_configs_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.toml"), SWEEP.replace("trials = 200", "trials = 0")).unwrap();
    assert_eq!(cvqec(d, &["sweep", "--config", "bad.toml"]).status.code(), Some(2));
    assert_eq!(cvqec(d, &["sweep", "--config", "none.toml"]).status.code(), Some(2));
}
