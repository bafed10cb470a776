use std::fs;
use std::path::Path;
use std::process::Command;

use reachunder_cli::{
    cmd_certify, cmd_converge, cmd_plot, cmd_run, default_reference_steps, read_reach_file,
    thread_cap, CommandKind, RunConfig, SystemSource, CERTIFY_FILE, CONVERGENCE_FILE,
    OUTLINE_FILE, PLOT_FILE, REACH_FILE,
};

const DRIFT_FREE: &str = r#"{
  "n": 2, "m": 2, "t": [0.0, 1.0],
  "A": {"kind": "constant", "matrix": [[0.0, 0.0], [0.0, 0.0]]},
  "B": {"kind": "constant", "matrix": [[1.0, 0.0], [0.0, 1.0]]},
  "X0": {"center": [0.0, 0.0], "generators": []},
  "U": {"center": [0.0, 0.0], "generators": [[1.0, 0.0], [0.0, 1.0]]}
}"#;

fn builtin(kind: CommandKind, name: &str, out: &Path) -> RunConfig {
    RunConfig::new(kind, SystemSource::Builtin(name.into()), out)
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn run_academic_starts_at_the_origin() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = builtin(CommandKind::Run, "academic", dir.path());
    cfg.steps = vec![5];
    let outcome = cmd_run(&cfg).unwrap();
    assert_eq!(outcome.files.len(), 2);
    let file = read_reach_file(&dir.path().join(REACH_FILE)).unwrap();
    assert_eq!(file.sets.len(), 6);
    assert_eq!(file.sets[0].num_generators(), 0);
    assert_eq!(file.sets[0].center().as_slice(), &[0.0, 0.0]);
    assert_eq!(file.accuracy_class, reachunder::AccuracyClass::Exact);
}

#[test]
fn run_dcdc_starts_at_the_initial_box() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = builtin(CommandKind::Run, "dcdc", dir.path());
    cfg.steps = vec![50];
    cmd_run(&cfg).unwrap();
    let file = read_reach_file(&dir.path().join(REACH_FILE)).unwrap();
    assert_eq!(file.sets.len(), 51);
    let x0 = &file.sets[0];
    let e1 = reachunder::Vector::from_vec(vec![1.0, 0.0]);
    let e2 = reachunder::Vector::from_vec(vec![0.0, 1.0]);
    assert!((x0.support(&e1).unwrap() - 1.1).abs() < 1e-15);
    assert!((x0.support(&(-&e1)).unwrap() + 0.9).abs() < 1e-15);
    assert!((x0.support(&e2).unwrap() - 5.1).abs() < 1e-15);
    assert!((x0.support(&(-&e2)).unwrap() + 4.9).abs() < 1e-15);
    let csv = fs::read_to_string(dir.path().join(OUTLINE_FILE)).unwrap();
    assert_eq!(csv.lines().count(), 1 + 51 * 64);
}

#[test]
fn run_from_spec_file_grows_linearly() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("drift.json");
    fs::write(&spec, DRIFT_FREE).unwrap();
    let mut cfg = RunConfig::new(CommandKind::Run, SystemSource::File(spec), dir.path());
    cfg.steps = vec![4];
    cmd_run(&cfg).unwrap();
    let file = read_reach_file(&dir.path().join(REACH_FILE)).unwrap();
    let e1 = reachunder::Vector::from_vec(vec![1.0, 0.0]);
    for (i, z) in file.sets.iter().enumerate() {
        assert!((z.support(&e1).unwrap() - i as f64 / 4.0).abs() < 1e-15);
    }
    assert_eq!(file.system, "drift");
}

#[test]
fn malformed_and_invalid_specs_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.json");
    fs::write(&spec, "{\n  \"n\": 2,\n  \"m\": 2\n  \"t\": [0, 1]\n}").unwrap();
    let cfg = RunConfig::new(CommandKind::Run, SystemSource::File(spec.clone()), dir.path());
    let err = format!("{:#}", cmd_run(&cfg).unwrap_err());
    assert!(err.contains("line 4"), "{err}");

    fs::write(&spec, DRIFT_FREE.replace("[0.0, 1.0]", "[1.0, 0.5]")).unwrap();
    let err = format!("{:#}", cmd_run(&cfg).unwrap_err());
    assert!(err.contains("assumption (i)"), "{err}");

    fs::write(&spec, DRIFT_FREE.replace(r#""X0": {"center": [0.0, 0.0], "generators": []}"#, r#""X0": {"center": []}"#)).unwrap();
    let err = format!("{:#}", cmd_run(&cfg).unwrap_err());
    assert!(err.contains("assumption (v)"), "{err}");
}

#[test]
fn certify_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = builtin(CommandKind::Certify, "dcdc", dir.path());
    cfg.trials = 50;
    let outcome = cmd_certify(&cfg).unwrap();
    assert!(outcome.success);
    let v = json(&dir.path().join(CERTIFY_FILE));
    assert_eq!(v["passed"], true);
    assert_eq!(v["seed"], 0);
    assert_eq!(v["tolerance"], 1e-6);
    assert_eq!(v["checked_indices"], serde_json::json!([3, 5, 8, 10]));
}

#[test]
fn certify_with_impossible_tolerance_fails() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = builtin(CommandKind::Certify, "academic", dir.path());
    cfg.trials = 5;
    cfg.steps = vec![3];
    cfg.tol = Some(0.0);
    let outcome = cmd_certify(&cfg).unwrap();
    assert!(!outcome.success);
    assert_eq!(json(&dir.path().join(CERTIFY_FILE))["passed"], false);
}

#[test]
fn converge_records_raw_distances() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = builtin(CommandKind::Converge, "academic", dir.path());
    cfg.steps = vec![1, 2, 5];
    cfg.reference_steps = Some(200);
    cmd_converge(&cfg).unwrap();
    let v = json(&dir.path().join(CONVERGENCE_FILE));
    assert_eq!(v["reference_steps"], 200);
    assert_eq!(v["mode"], "final_set");
    let d: Vec<f64> = serde_json::from_value(v["distances"].clone()).unwrap();
    assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");

    cfg.reference_steps = Some(12);
    assert!(cmd_converge(&cfg).is_err());
}

#[test]
fn reference_default_is_a_common_multiple() {
    assert_eq!(default_reference_steps(&[1, 2, 5]), 20);
    assert_eq!(default_reference_steps(&[5, 10, 20, 50]), 200);
    assert_eq!(default_reference_steps(&[3, 4]), 24);
}

#[test]
fn plot_overlays_each_grid() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = builtin(CommandKind::Plot, "academic", dir.path());
    cfg.steps = vec![5, 1, 2];
    cfg.reference_steps = Some(100);
    cfg.directions = 32;
    cmd_plot(&cfg).unwrap();
    let svg = fs::read_to_string(dir.path().join(PLOT_FILE)).unwrap();
    assert_eq!(svg.matches("<polygon").count(), 4);
    for color in ["#d62728", "#2ca02c", "#1f77b4", "#000000"] {
        assert!(svg.contains(color), "{color}");
    }
    let legend: Vec<usize> = ["N = 1<", "N = 2<", "N = 5<", "N = 100 (reference)"]
        .iter()
        .map(|l| svg.find(l).unwrap())
        .collect();
    assert!(legend.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn plot_tube_draws_every_set() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = builtin(CommandKind::Plot, "dcdc", dir.path());
    cfg.steps = vec![5, 10];
    cfg.mode = reachunder::ConvergenceMode::Tube;
    cmd_plot(&cfg).unwrap();
    let svg = fs::read_to_string(dir.path().join(PLOT_FILE)).unwrap();
    assert_eq!(svg.matches("<polygon").count(), 6 + 11);
}

#[test]
fn plot_rejects_non_planar_systems() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("line.json");
    fs::write(
        &spec,
        r#"{"n":1,"m":1,"t":[0,1],"A":{"kind":"constant","matrix":[[-1]]},
            "B":{"kind":"constant","matrix":[[1]]},"X0":{"center":[0]},
            "U":{"center":[0],"generators":[[1]]}}"#,
    )
    .unwrap();
    let mut cfg = RunConfig::new(CommandKind::Plot, SystemSource::File(spec.clone()), dir.path());
    cfg.steps = vec![2];
    let err = cmd_plot(&cfg).unwrap_err().to_string();
    assert!(err.contains("planar"), "{err}");
    // run still works; there is just no outline export
    let cfg = RunConfig::new(CommandKind::Run, SystemSource::File(spec), dir.path());
    assert_eq!(cmd_run(&cfg).unwrap().files.len(), 1);
}

#[test]
fn thread_cap_parsing() {
    assert_eq!(thread_cap(None).unwrap(), None);
    assert_eq!(thread_cap(Some("4")).unwrap(), Some(4));
    assert!(thread_cap(Some("0")).is_err());
    assert!(thread_cap(Some("many")).is_err());
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_reachunder"))
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();

    let ok = binary()
        .args(["run", "--builtin", "dcdc", "--steps", "5", "--out", out])
        .env("REACHUNDER_THREADS", "2")
        .output()
        .unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));

    let failed = binary()
        .args(["certify", "--builtin", "dcdc", "--steps", "4", "--trials", "3", "--tol", "0", "--out", out])
        .output()
        .unwrap();
    assert_eq!(failed.status.code(), Some(2));

    let missing = binary()
        .args(["run", "--spec", "/nonexistent/system.json", "--out", out])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("cannot read"));

    let both = binary()
        .args(["run", "--builtin", "dcdc", "--spec", "x.json"])
        .output()
        .unwrap();
    assert!(!both.status.success());
}
