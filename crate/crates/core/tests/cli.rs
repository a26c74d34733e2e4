use std::path::Path;
use std::process::{Command, Output};

fn iceberg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iceberg")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn graph(dir: &Path, k: usize) -> String {
    let path = dir.join(format!("g{k}.txt"));
    let p = path.to_str().unwrap();
    stdout(&iceberg(&["--out", p, "gen", "--family", "regular", "--k", &k.to_string(), "--degree", "3"]));
    p.to_string()
}

#[test]
fn model_prints_prediction() {
    let out = stdout(&iceberg(&["model", "--k", "8", "--ell", "3", "--s", "2"]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let post = v["post_rate"].as_f64().unwrap();
    assert!(post > 0.0 && post < 1.0);
}

#[test]
fn oracle_rows() {
    let out = stdout(&iceberg(&["oracle", "--block", "final", "--k", "8", "--mu", "1"]));
    assert!(out.lines().nth(1).unwrap().starts_with("final,8,1,0.0889,0.0000,0.0000,0.9111"));
}

#[test]
fn run_and_fit_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let g = graph(dir.path(), 6);
    let data = dir.path().join("data.json");
    let data = data.to_str().unwrap();
    for ell in ["2", "3", "4"] {
        let out = stdout(&iceberg(&["--shots", "200", "run", "--graph", &g, "--ell", ell, "--s", "0", "--dataset", data]));
        assert!(out.starts_with("k,ell,s,shots"));
    }
    let o = iceberg(&["fit", "--data", data, "--role", "unencoded", "--iterations", "100", "--no-filter"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["names"][0], "p_l");
    assert_eq!(v["bootstrap"]["iterations"], 100);
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("parameter,model,ci_low,ci_high\np_l,"));
}

#[test]
fn encoded_run_reports_post_selection() {
    let dir = tempfile::tempdir().unwrap();
    let g = graph(dir.path(), 6);
    let out = stdout(&iceberg(&["--shots", "300", "--seed", "4", "run", "--graph", &g, "--ell", "2", "--s", "2"]));
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[..3], ["6", "2", "2"]);
    let post: f64 = row[7].parse().unwrap();
    assert!(post > 0.5 && post < 1.0);
}

#[test]
fn runtime_from_fractions() {
    let out = stdout(&iceberg(&["runtime", "--times", "0.384,1.0", "--discards", "0.5,0.5"]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!((v["lambda"].as_f64().unwrap() - 0.692).abs() < 1e-12);
}

#[test]
fn oversized_run_hits_guard() {
    let dir = tempfile::tempdir().unwrap();
    let g = graph(dir.path(), 30);
    let o = iceberg(&["--shots", "10", "run", "--graph", &g, "--ell", "1", "--s", "2"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("guard"));
}

#[test]
fn bad_arguments_exit_nonzero() {
    assert_eq!(iceberg(&["oracle", "--block", "init", "--k", "8", "--mu", "4"]).status.code(), Some(1));
    assert!(!iceberg(&["model", "--k", "7"]).status.success());
}
