use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn quasi(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quasi"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn simulate_free_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "free.json", r#"{"scenario": "free"}"#);
    let o = quasi(&["simulate", "--config", &cfg, "--out", "run"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("free: PASS"));
    assert!(dir.path().join("run/trajectory.csv").exists());
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "h.json", r#"{"scenario": "harmonic", "q0": 0.7}"#);
    for out in ["a", "b"] {
        assert_eq!(code(&quasi(&["simulate", "--config", &cfg, "--out", out], dir.path())), 0);
    }
    for f in ["trajectory.csv", "summary.json"] {
        assert_eq!(
            fs::read(dir.path().join("a").join(f)).unwrap(),
            fs::read(dir.path().join("b").join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn config_errors_exit_two_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    for (text, field) in [
        (r#"{"scenario": "free", "mass": -2}"#, "mass"),
        (r#"{"scenario": "free", "massx": 1}"#, "massx"),
        (r#"{"scenario": "free""#, ""),
    ] {
        let cfg = write(dir.path(), "bad.json", text);
        let o = quasi(&["simulate", "--config", &cfg], dir.path());
        assert_eq!(code(&o), 2, "{text}");
        assert!(String::from_utf8_lossy(&o.stderr).contains(field), "{text}");
    }
    let o = quasi(&["simulate", "--config", "missing.json"], dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn brackets_prints_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = quasi(&["brackets", "--order", "3"], dir.path());
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["mismatches"], 0);
    assert_eq!(code(&quasi(&["brackets", "--order", "1"], dir.path())), 2);
}

#[test]
fn oracle_rejects_unknown_preset() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&quasi(&["oracle", "--scenario", "morse"], dir.path())), 2);
}

#[test]
fn transform_round_trip_via_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "free.json", r#"{"scenario": "free", "t_end": 2}"#);
    assert_eq!(code(&quasi(&["simulate", "--config", &cfg, "--out", "run"], dir.path())), 0);
    let o = quasi(
        &["transform", "--to", "darboux", "--input", "run/trajectory.csv"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.contains("s") && header.contains("p_s"), "{header}");
    assert_eq!(
        code(&quasi(&["transform", "--to", "sphere", "--input", "run/trajectory.csv"], dir.path())),
        2
    );
}

#[test]
fn two_dof_limit_reports_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "l.json", r#"{"scenario": "two-dof-limit"}"#);
    let o = quasi(&["simulate", "--config", &cfg, "--out", "run"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(dir.path().join("run/summary.json").exists());
}

#[test]
fn adiabatic_compare_rejects_other_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "a.json", r#"{"scenario": "free"}"#);
    assert_eq!(code(&quasi(&["adiabatic-compare", "--config", &cfg], dir.path())), 2);
}
