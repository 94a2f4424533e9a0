use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn meshloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_meshloc"))
        .args(args)
        .env_remove("MESHLOC_LOG")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_example(dir: &Path, duration: f64) -> PathBuf {
    let out = meshloc(&["example"]);
    assert!(out.status.success());
    let mut v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    v["duration_s"] = duration.into();
    let p = dir.join("s.json");
    fs::write(&p, serde_json::to_vec_pretty(&v).unwrap()).unwrap();
    p
}

#[test]
fn example_passes_validate() {
    let dir = tempfile::tempdir().unwrap();
    let out = meshloc(&["example"]);
    let p = dir.path().join("example.json");
    fs::write(&p, &out.stdout).unwrap();
    let v = meshloc(&["validate", "--scenario", p.to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(0), "{}", stderr(&v));
}

#[test]
fn run_writes_metrics_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_example(dir.path(), 5.0);
    let out = dir.path().join("r");
    let o = meshloc(&[
        "run",
        "--scenario",
        s.to_str().unwrap(),
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(csv.starts_with("time_s,node_id,metric,value\n"));
    let metrics: std::collections::BTreeSet<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(
        metrics,
        ["loc_error_m", "localized", "ranging_success", "routes"]
            .into_iter()
            .collect()
    );
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 7);
    assert_eq!(summary["duration_s"], 5.0);
    assert_eq!(summary["samples"], 50);
}

#[test]
fn same_seed_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_example(dir.path(), 5.0);
    let mut files = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let o = meshloc(&[
            "run",
            "--scenario",
            s.to_str().unwrap(),
            "--seed",
            "3",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        files.push((
            fs::read(out.join("metrics.csv")).unwrap(),
            fs::read(out.join("summary.json")).unwrap(),
        ));
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn duration_override_wins() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_example(dir.path(), 5.0);
    let out = dir.path().join("r");
    let o = meshloc(&[
        "run",
        "--scenario",
        s.to_str().unwrap(),
        "--duration",
        "1.5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["duration_s"], 1.5);
    assert_eq!(summary["samples"], 15);

    let o = meshloc(&[
        "run",
        "--scenario",
        s.to_str().unwrap(),
        "--duration=-1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn json_format_and_parallel_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_example(dir.path(), 2.0);
    let out = dir.path().join("r");
    let o = meshloc(&[
        "run",
        "--scenario",
        s.to_str().unwrap(),
        "--seed",
        "10",
        "--parallel",
        "3",
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for seed in 10..13 {
        let series: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join(format!("metrics_seed{seed}.json"))).unwrap()).unwrap();
        assert!(!series.as_array().unwrap().is_empty());
        let summary: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join(format!("summary_seed{seed}.json"))).unwrap()).unwrap();
        assert_eq!(summary["seed"], seed);
    }
    assert!(!out.join("metrics.json").exists());
}

#[test]
fn validate_lists_every_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    fs::write(
        &p,
        r#"{
  "schema_version": 1,
  "duration_s": 5,
  "nodes": [
    {"id": 1, "waypoints": [{"t_s": 0, "pos": [0, 0, 0]}]},
    {"id": 1, "waypoints": [{"t_s": 0, "pos": [5, 0, 0]}]}
  ],
  "topics": [{"name": "t", "publishers": [1], "subscribers": [99]}]
}"#,
    )
    .unwrap();
    let o = meshloc(&["validate", "--scenario", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("duplicate node id 1"), "{err}");
    assert!(err.contains("nonexistent subscriber node 99"), "{err}");
}

#[test]
fn parse_errors_carry_position() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    fs::write(&p, "{\n  \"schema_version\": 1,\n  \"speed\": 3\n}").unwrap();
    let o = meshloc(&["validate", "--scenario", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn missing_file_is_runtime_error() {
    let o = meshloc(&["run", "--scenario", "/nonexistent/s.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cannot read"));
}
