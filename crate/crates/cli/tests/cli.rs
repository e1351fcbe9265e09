use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nucstab"))
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn report_without_timestamp(text: &str) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(text).unwrap();
    v.as_object_mut().unwrap().remove("timestamp");
    v
}

#[test]
fn running_fixture_analyzes_clean() {
    let out = run(&["analyze", fixture("diag-2x2.json").to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in ["rcq", "sosc_primal", "srcq_dual", "srcq_primal", "sosc_dual"] {
        assert_eq!(v["report"][key]["holds"], serde_json::Value::Bool(true), "{key}");
    }
}

#[test]
fn rcq_failure_exits_4_with_witness() {
    let out = run(&["analyze", fixture("rcq-fail.json").to_str().unwrap()]);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stdout).contains("y = [1.0]"));
}

#[test]
fn parse_errors_exit_1_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, "{\"m\": 2,\n \"n\": }").unwrap();
    let out = run(&["analyze", p.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn non_finite_input_is_rejected() {
    let text = std::fs::read_to_string(fixture("diag-2x2.json")).unwrap();
    let text = text.replacen("-3.3643372015015509e0", "1e400", 1);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("nan.json");
    std::fs::write(&p, text).unwrap();
    assert_eq!(code(&run(&["analyze", p.to_str().unwrap()])), 1);
}

#[test]
fn analysis_is_deterministic_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    let out = run(&[
        "plant", "--dims", "2", "3", "6", "1", "--counts", "1", "0", "1", "0", "--sigma", "1.8", "--wspec", "0.4",
        "--qpattern", "a", "--fmap", "gaussian", "--frames", "random", "--seed", "5", "--out", inst.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let args = ["analyze", inst.to_str().unwrap(), "--calmness", "--trials", "5", "--seed", "11"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    let (ta, tb) = (String::from_utf8(a.stdout).unwrap(), String::from_utf8(b.stdout).unwrap());
    assert_eq!(report_without_timestamp(&ta), report_without_timestamp(&tb));
    let strip = |t: &str| t.lines().filter(|l| !l.contains("\"timestamp\"")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&ta), strip(&tb));
}

#[test]
fn plant_reproduces_the_bundled_fixture() {
    let out = run(&["plant", "--dims", "2", "2", "4", "0", "--counts", "1", "0", "1", "0", "--sigma", "2", "--wspec", "0.5"]);
    assert_eq!(code(&out), 0);
    let expect = std::fs::read_to_string(fixture("diag-2x2.json")).unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), expect);
}

#[test]
fn sd_block_is_flagged() {
    let out = run(&[
        "plant", "--dims", "2", "3", "6", "0", "--counts", "1", "1", "0", "0", "--sigma", "2", "--fmap", "gaussian",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["metadata"]["sd_block present"], serde_json::Value::Bool(true));
}

#[test]
fn inconsistent_counts_exit_1() {
    let bad_counts = run(&["plant", "--dims", "2", "2", "4", "0", "--counts", "1", "0", "0", "0", "--sigma", "2"]);
    assert_eq!(code(&bad_counts), 1);
    let bad_pattern = run(&["plant", "--dims", "2", "2", "4", "2", "--counts", "1", "0", "1", "0", "--sigma", "2", "--wspec", "0.5", "--qpattern", "a"]);
    assert_eq!(code(&bad_pattern), 1);
}

#[test]
fn planted_files_are_distinct_and_self_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let mut seen = std::collections::HashSet::new();
    for seed in 0..20 {
        let p = dir.path().join(format!("s{seed}.json"));
        let out = run(&[
            "plant", "--dims", "3", "3", "9", "2", "--counts", "1", "0", "1", "1", "--sigma", "1.7", "--wspec", "0.3",
            "--qpattern", "az", "--fmap", "gaussian", "--frames", "random", "--seed", &seed.to_string(), "--out",
            p.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0);
        assert!(seen.insert(std::fs::read_to_string(&p).unwrap()));
        let a = run(&["analyze", p.to_str().unwrap()]);
        assert_eq!(code(&a), 0, "seed {seed}: {}", String::from_utf8_lossy(&a.stderr));
        let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
        assert!(v["point_residual"].as_f64().unwrap() <= 1e-12);
    }
}

#[test]
fn fast_selftest_passes() {
    let out = run(&["selftest", "--level", "fast"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
}
