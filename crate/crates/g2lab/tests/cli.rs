use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_g2lab"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(cmd: &str, scenarios: &[PathBuf], out: &Path, extra: &[&str]) -> i32 {
    let mut c = bin();
    c.arg(cmd).arg("--out").arg(out).args(extra).arg("--scenario");
    c.args(scenarios);
    let o = c.output().expect("binary runs");
    o.status.code().expect("exit code")
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn flat_torus_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run("flow", &[scenario("flat_torus_flow.json")], dir.path(), &[]), 0);
    let mut rdr = csv::Reader::from_path(dir.path().join("trace.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let fi = headers.iter().position(|h| h == "f").unwrap();
    let di = headers.iter().position(|h| h == "detE").unwrap();
    let last = rdr.records().last().unwrap().unwrap();
    let f: f64 = last[fi].parse().unwrap();
    let det: f64 = last[di].parse().unwrap();
    assert!((f - (-0.3f64).exp()).abs() <= 1e-9, "f(1) = {f}");
    assert!((det - 0.3f64.exp()).abs() <= 1e-9, "det E(1) = {det}");
    assert_eq!(report(dir.path())["status"], "pass");
}

#[test]
fn exit_codes_follow_status() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(run("flow", &[scenario("traceless_k_fails.json")], &d.join("a"), &[]), 1);
    assert_eq!(report(&d.join("a"))["witness"]["check"], "positive-symmetric-K");
    assert_eq!(run("flow", &[scenario("broken_jacobi.json")], &d.join("b"), &[]), 2);
    assert_eq!(report(&d.join("b"))["status"], "error");
    assert_eq!(run("check-form", &[scenario("split_form_check.json")], &d.join("c"), &[]), 1);
    assert_eq!(run("check-form", &[scenario("psi0_check.json")], &d.join("d"), &[]), 0);
}

#[test]
fn command_mismatch_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run("lift", &[scenario("flat_torus_flow.json")], dir.path(), &[]), 2);
}

#[test]
fn literal_reading_flag_fails_su2() {
    let dir = tempfile::tempdir().unwrap();
    let s = [scenario("su2_reduced_check.json")];
    assert_eq!(run("reduced-check", &s, &dir.path().join("a"), &[]), 0);
    assert_eq!(run("reduced-check", &s, &dir.path().join("b"), &["--paper-literal"]), 1);
    assert_eq!(report(&dir.path().join("b"))["witness"]["check"], "f-evolution");
}

#[test]
fn theorem3_writes_lift_and_gauge() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run("theorem3", &[scenario("su2_drift_lift.json")], dir.path(), &[]), 0);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("lift.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["tau"].as_array().unwrap().len(), 9);
    assert!(meta["tau_det"].as_f64().unwrap() > 0.0);
    assert!(dir.path().join("lift.csv").exists());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let s = [scenario("su2_flow.json")];
    assert_eq!(run("flow", &s, &dir.path().join("a"), &[]), 0);
    assert_eq!(run("flow", &s, &dir.path().join("b"), &[]), 0);
    for name in ["trace.csv", "trace.meta.json", "reduced.csv", "report.json"] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs");
    }
}

#[test]
fn parallel_jobs_match_serial() {
    let dir = tempfile::tempdir().unwrap();
    let s = [scenario("flat_torus_flow.json"), scenario("su2_flow.json"), scenario("traceless_k_fails.json")];
    let serial = run("flow", &s, &dir.path().join("serial"), &[]);
    let parallel = run("flow", &s, &dir.path().join("par"), &["--jobs", "3"]);
    assert_eq!(serial, 1);
    assert_eq!(parallel, 1);
    for stem in ["flat_torus_flow", "su2_flow"] {
        let a = std::fs::read(dir.path().join("serial").join(stem).join("trace.csv")).unwrap();
        let b = std::fs::read(dir.path().join("par").join(stem).join("trace.csv")).unwrap();
        assert_eq!(a, b);
    }
}
