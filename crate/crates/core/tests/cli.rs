use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toeplitz-lab")).args(args).output().expect("binary runs")
}

fn write_manifest(dir: &Path, name: &str, value: &Value) -> String {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

fn hopping_manifest() -> Value {
    json!({
        "experiment": "theorem1",
        "parameters": {
            "n": 2,
            "symbol": {"terms": [
                {"gamma": [1, 0], "delta": [0, 1], "re": 1.0, "im": 0.0},
                {"gamma": [0, 1], "delta": [1, 0], "re": 1.0, "im": 0.0}
            ]},
            "f": [0.0, 0.0, 1.0],
            "k_list": [8, 12, 16, 20, 24],
            "samples": 300000,
            "seed": 11
        }
    })
}

#[test]
fn theorem1_run_writes_tables_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_manifest(dir.path(), "m.json", &hopping_manifest());
    let prefix = dir.path().join("run");
    let out = lab(&["--manifest", &manifest, "--out", prefix.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let csv = fs::read_to_string(dir.path().join("run_measures.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("k,mu,scaled_mu,ratio_to_c0"));
    assert_eq!(csv.lines().count(), 6);
    let fit: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("run_fit.json")).unwrap()).unwrap();
    assert!(fit.get("c").is_some() && fit.get("residual").is_some() && fit.get("k_range").is_some());
    let sidecar: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("run_manifest.json")).unwrap()).unwrap();
    assert_eq!(sidecar["experiment"], "theorem1");
    let listed = String::from_utf8_lossy(&out.stdout);
    assert!(listed.lines().any(|l| l.ends_with("run_summary.json")));
}

#[test]
fn outputs_are_identical_across_reruns_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_manifest(dir.path(), "m.json", &hopping_manifest());
    let mut runs = Vec::new();
    for (tag, threads) in [("a", "1"), ("b", "1"), ("c", "3")] {
        let prefix = dir.path().join(tag);
        let out = lab(&["--manifest", &manifest, "--out", prefix.to_str().unwrap(), "--threads", threads]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let files: Vec<Vec<u8>> = ["measures.csv", "fit.json", "summary.json"]
            .iter()
            .map(|s| fs::read(dir.path().join(format!("{tag}_{s}"))).unwrap())
            .collect();
        runs.push(files);
    }
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0], runs[2]);
}

#[test]
fn seed_flag_overrides_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_manifest(dir.path(), "m.json", &hopping_manifest());
    let prefix = dir.path().join("s");
    let out = lab(&["--manifest", &manifest, "--out", prefix.to_str().unwrap(), "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let sidecar: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("s_manifest.json")).unwrap()).unwrap();
    assert!(sidecar.to_string().contains("\"seed\":5"), "{sidecar}");
}

#[test]
fn validation_failures_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_manifest(
        dir.path(),
        "bad.json",
        &json!({"experiment": "theorem1", "parameters": {"n": 1, "order": 9, "colour": "blue"}}),
    );
    let out = lab(&["--manifest", &bad, "--out", dir.path().join("x").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for field in ["n", "order", "colour"] {
        assert!(err.contains(field), "{field} missing from: {err}");
    }

    let not_free = write_manifest(
        dir.path(),
        "sub.json",
        &json!({"experiment": "theorem2", "parameters": {"subtorus": {"n": 2, "d": 1, "Bt": [[1, -1]], "alpha": [0]}}}),
    );
    let out = lab(&["--manifest", &not_free, "--out", dir.path().join("y").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));

    assert_eq!(lab(&["--out", dir.path().join("z").to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(lab(&["--experiment", "model", "--threads", "0"]).status.code(), Some(2));
}

#[test]
fn failed_isometry_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_manifest(
        dir.path(),
        "model.json",
        &json!({"experiment": "model", "parameters": {"hermite_nodes": 4, "fourier_nodes": 24}}),
    );
    let prefix = dir.path().join("m");
    let out = lab(&["--manifest", &manifest, "--out", prefix.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("m_report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], false);
    assert!(report["exceedance_count"].as_u64().unwrap() > 0);
}

#[test]
fn other_experiments_succeed() {
    let dir = tempfile::tempdir().unwrap();
    for (kind, file, header) in [
        ("theorem2", "measures.csv", "k,count,mu,scaled_mu,ratio_to_leading"),
        ("inverse", "reconstruction.csv", "a_0,a_1,p_hat,p_true,abs_err"),
        ("model", "gram.csv", ""),
        ("distinguish", "report.json", ""),
    ] {
        let prefix = dir.path().join(kind);
        let out = lab(&["--experiment", kind, "--out", prefix.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{kind}: {}", String::from_utf8_lossy(&out.stderr));
        let text = fs::read_to_string(dir.path().join(format!("{kind}_{file}"))).unwrap();
        if !header.is_empty() {
            assert_eq!(text.lines().next(), Some(header));
        }
        assert!(dir.path().join(format!("{kind}_manifest.json")).exists());
    }
}
