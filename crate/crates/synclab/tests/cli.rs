use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};
use synclab::config::REFERENCE_JSON;

fn synclab(args: &[&str], out_env: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_synclab"));
    cmd.args(args).env_remove("SYNCLAB_OUT");
    if let Some(dir) = out_env {
        cmd.env("SYNCLAB_OUT", dir);
    }
    cmd.output().expect("binary runs")
}

fn write_doc(dir: &Path, name: &str, doc: &Value) -> String {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(doc).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

fn reference_doc() -> Value {
    serde_json::from_str(REFERENCE_JSON).unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn validate_reference_prints_ok() {
    let tmp = tempfile::tempdir().unwrap();
    let file = write_doc(tmp.path(), "ref.json", &reference_doc());
    let o = synclab(&["validate", &file], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "OK");
}

#[test]
fn validate_rejects_missing_leader_edge() {
    let tmp = tempfile::tempdir().unwrap();
    let mut doc = reference_doc();
    doc["graph"]["edges"] = json!([[1, 2], [2, 1], [2, 3], [3, 2]]);
    doc["graph"]["followers"] = json!(3);
    let file = write_doc(tmp.path(), "bad.json", &doc);
    let o = synclab(&["validate", &file], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("spanning tree"), "{}", stderr(&o));
}

#[test]
fn validate_rejects_negative_mu() {
    let tmp = tempfile::tempdir().unwrap();
    let mut doc = reference_doc();
    doc["observer"]["mu"] = json!(-10.0);
    let file = write_doc(tmp.path(), "mu.json", &doc);
    let o = synclab(&["validate", &file], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("mu must be positive"), "{}", stderr(&o));
}

#[test]
fn validate_rejects_unknown_key_and_missing_file() {
    let tmp = tempfile::tempdir().unwrap();
    let mut doc = reference_doc();
    doc["sim"]["integrator"] = json!("euler");
    let file = write_doc(tmp.path(), "unk.json", &doc);
    assert_eq!(synclab(&["validate", &file], None).status.code(), Some(2));
    let missing = tmp.path().join("nope.json");
    assert_eq!(
        synclab(&["validate", missing.to_str().unwrap()], None)
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn run_reference_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ref");
    let o = synclab(
        &[
            "run",
            "--reference",
            "--out",
            out.to_str().unwrap(),
            "--set",
            "sim.t_end=2",
            "--set",
            "sim.log_stride=50",
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in [
        "run.csv",
        "errors.csv",
        "metrics.json",
        "pe_report.csv",
        "plot.gp",
    ] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let csv = fs::read_to_string(out.join("run.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), 3 + 6 * 21);
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 41);
    let last: Vec<f64> = rows[40].split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(last[0], 2.0);
    let metrics: Value =
        serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["followers"].as_array().unwrap().len(), 6);
    assert!(metrics["observer_lyapunov"]["note"]
        .as_str()
        .unwrap()
        .contains("diagnostic"));
}

#[test]
fn run_observer_only_uses_env_output_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let o = synclab(
        &[
            "run",
            "--reference",
            "--observer-only",
            "--set",
            "sim.t_end=1",
        ],
        Some(tmp.path()),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(tmp.path().join("run.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(header.split(',').count(), 3 + 6 * 6);
    assert!(!header.contains("q_1_0"));

    // --out wins over the environment
    let explicit = tmp.path().join("explicit");
    let o = synclab(
        &[
            "run",
            "--reference",
            "--observer-only",
            "--set",
            "sim.t_end=0.5",
            "--out",
            explicit.to_str().unwrap(),
        ],
        Some(tmp.path()),
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(explicit.join("run.csv").is_file());
}

#[test]
fn run_with_halved_step_gives_same_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let metrics = |dt: &str, name: &str| -> Value {
        let out = tmp.path().join(name);
        let o = synclab(
            &[
                "run",
                "--reference",
                "--observer-only",
                "--out",
                out.to_str().unwrap(),
                "--set",
                "sim.t_end=20",
                "--set",
                &format!("sim.dt={dt}"),
            ],
            None,
        );
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap()
    };
    let a = metrics("1e-3", "a");
    let b = metrics("2e-3", "b");
    for key in ["max_v_err", "max_omega_err"] {
        let (x, y) = (a[key].as_f64().unwrap(), b[key].as_f64().unwrap());
        assert!(
            (x - y).abs() <= 1e-3 * x.max(y) + 1e-12,
            "{key}: {x} vs {y}"
        );
    }
}

#[test]
fn run_check_failure_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    // one second is far too short for the tracking gates
    let o = synclab(
        &[
            "run",
            "--reference",
            "--check",
            "--set",
            "sim.t_end=1",
            "--out",
            tmp.path().to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(tmp.path().join("metrics.json").is_file());
}

#[test]
fn run_numerical_failure_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let o = synclab(
        &[
            "run",
            "--reference",
            "--observer-only",
            "--set",
            "observer.v_hat0.0=[60.0, -60.0]",
            "--set",
            "sim.t_end=1",
            "--out",
            tmp.path().to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("non-finite"));
}

#[test]
fn run_rejects_bad_settings() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    for set in [
        "sim.dt=0.05",
        "sim.t_end=-1",
        "controller.alpha=0",
        "sim.bogus=1",
    ] {
        let o = synclab(&["run", "--reference", "--set", set, "--out", out], None);
        assert_eq!(o.status.code(), Some(2), "{set}: {}", stderr(&o));
    }
}

#[test]
fn sweep_mu_runs_each_value() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sweep");
    let o = synclab(
        &[
            "sweep",
            "--reference",
            "--observer-only",
            "--param",
            "observer.mu",
            "--values",
            "1,10,100",
            "--set",
            "sim.t_end=5",
            "--out",
            out.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = fs::read_to_string(out.join("sweep_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
    for v in ["1", "10", "100"] {
        assert!(out
            .join(format!("observer.mu={v}"))
            .join("run.csv")
            .is_file());
    }
}

#[test]
fn sweep_keeps_partial_results() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sweep");
    let o = synclab(
        &[
            "sweep",
            "--reference",
            "--observer-only",
            "--param",
            "observer.mu",
            "--values",
            "10,-1",
            "--set",
            "sim.t_end=1",
            "--out",
            out.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(2));
    let summary = fs::read_to_string(out.join("sweep_summary.csv")).unwrap();
    assert!(summary.contains(",ok,0,"));
    assert!(summary.contains("mu must be positive"));
    assert!(out.join("observer.mu=10").join("run.csv").is_file());
}

#[test]
fn sweep_empty_values_is_a_no_op() {
    let tmp = tempfile::tempdir().unwrap();
    let file = write_doc(tmp.path(), "ref.json", &reference_doc());
    let out = tmp.path().join("none");
    let o = synclab(
        &[
            "sweep",
            &file,
            "--param",
            "observer.mu",
            "--values",
            "",
            "--out",
            out.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn sweep_rejects_non_scalar_parameter() {
    let tmp = tempfile::tempdir().unwrap();
    let o = synclab(
        &[
            "sweep",
            "--reference",
            "--param",
            "observer.kappa0",
            "--values",
            "1",
            "--out",
            tmp.path().to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(2));
}
