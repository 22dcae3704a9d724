use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pilotwave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pilotwave"))
        .args(args)
        .env("PILOTWAVE_WORKERS", "2")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

const SMALL: [&str; 6] = ["--set", "source_count=3000", "--set", "eitse.count=400", "--set", "bins=20"];

fn with_small<'a>(head: &[&'a str]) -> Vec<&'a str> {
    let mut v = head.to_vec();
    v.extend_from_slice(&SMALL);
    v
}

#[test]
fn validate_reference_passes() {
    let o = pilotwave(&["validate"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let lines: Vec<Value> =
        String::from_utf8(o.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let names: Vec<&str> = lines.iter().map(|l| l["check"].as_str().unwrap()).collect();
    assert_eq!(names, ["spectral_oracle", "derivatives", "potential_closed_form", "richardson", "equivariance_smoke"]);
    assert!(lines.iter().all(|l| l["pass"] == true));
}

#[test]
fn validate_failure_exits_one() {
    let o = pilotwave(&["validate", "--set", "x_extent=5"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let first: Value = serde_json::from_str(String::from_utf8(o.stdout).unwrap().lines().next().unwrap()).unwrap();
    assert_eq!(first["check"], "spectral_oracle");
    assert_eq!(first["pass"], false);
}

#[test]
fn malformed_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{\n  \"sigma0\": 1.0,\n  \"slit_separation\": ,\n}\n").unwrap();
    let o = pilotwave(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("cannot parse") && err.contains("line 3"), "{err}");
}

#[test]
fn invalid_values_list_every_violation() {
    let o = pilotwave(&["validate", "--set", "sigma0=-1", "--set", "bins=0"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("sigma0") && err.contains("bins"), "{err}");
}

#[test]
fn run_writes_ensemble_and_refuses_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let args = with_small(&["run", "--interpretation", "sqm", "--population", "inserted", "--out", out.to_str().unwrap()]);
    let o = pilotwave(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["subcommand"], "run");
    assert_eq!(manifest["files"], serde_json::json!(["ensemble_sqm_inserted.json", "arrivals_sqm_inserted.csv"]));
    let rows = fs::read_to_string(out.join("arrivals_sqm_inserted.csv")).unwrap();
    assert!(rows.lines().count() > 0 && rows.lines().count() <= 400);

    let again = pilotwave(&args);
    assert_eq!(again.status.code(), Some(2));
    assert!(stderr(&again).contains("--force"), "{}", stderr(&again));
    let mut forced = args.clone();
    forced.push("--force");
    assert_eq!(pilotwave(&forced).status.code(), Some(0));
}

#[test]
fn run_trace_writes_paths() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace");
    let o = pilotwave(&[
        "run", "--interpretation", "bi", "--population", "source", "--trace",
        "--set", "source_count=5", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let traj = fs::read_to_string(out.join("trace/traj_0.csv")).unwrap();
    let mut lines = traj.lines();
    assert_eq!(lines.next(), Some("t,x,z"));
    let last: Vec<f64> = lines.last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((last[2] - 50.0).abs() < 1e-9, "{last:?}");
}

#[test]
fn field_dump() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("field");
    let o = pilotwave(&["field", "--quantity", "density", "--nx", "11", "--nz", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let pgm = fs::read(out.join("field_density.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n11 5\n255\n"));
    assert!(out.join("field_density.csv").exists());
}

#[test]
fn compare_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (out, workers) in [(&a, "1"), (&b, "3")] {
        let o = pilotwave(&with_small(&["compare", "--workers", workers, "--out", out.to_str().unwrap()]));
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let files = read_json(&a.join("manifest.json"))["files"].as_array().unwrap().clone();
    assert!(files.iter().any(|f| f == "report.json") && files.iter().any(|f| f == "fig2.csv"));
    for f in &files {
        let f = f.as_str().unwrap();
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
    let report = read_json(&a.join("report.json"));
    assert_eq!(report["config_hash"], read_json(&a.join("manifest.json"))["config_hash"]);
    assert!(report["flags"]["sqm_dark_zones_filled"].is_boolean());
}

#[test]
fn empty_inserted_ensemble() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("empty");
    let o = pilotwave(&["compare", "--set", "source_count=3000", "--set", "eitse.count=0", "--set", "bins=20", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(fs::read(out.join("arrivals_bi_inserted.csv")).unwrap().is_empty());
    let ensemble = read_json(&out.join("ensemble_sqm_inserted.json"));
    assert_eq!(ensemble["status_counts"]["arrived"], 0);
    assert_eq!(ensemble["spec"]["count"], 0);
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["status_counts"]["bi_inserted"]["arrived"], 0);
}

#[test]
fn sweep_index() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let o = pilotwave(&with_small(&["sweep", "--vary", "seed=1:2:2", "--vary", "eitse.insertion_velocity.v_z0=0.5:1:2", "--out", out.to_str().unwrap()]));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let index = fs::read_to_string(out.join("index.csv")).unwrap();
    let rows: Vec<&str> = index.lines().collect();
    assert_eq!(rows[0], "point,seed,eitse.insertion_velocity.v_z0,config_hash,bi_pattern_clearer,sqm_dark_zones_filled,status");
    assert_eq!(rows.len(), 5);
    assert!(rows[1].starts_with("point_000,1,0.5,") && rows[4].starts_with("point_003,2,1,"));
    for k in 0..4 {
        let cfg = read_json(&out.join(format!("point_{k:03}/manifest.json")));
        assert!(rows[k + 1].contains(cfg["config_hash"].as_str().unwrap()));
    }
}
