use std::fs;
use std::process::{Command, Output};

fn hyplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyplab")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn ball_of_radius_two_has_17_elements() {
    let o = hyplab(&["--radius", "2", "ball"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["results"]["ball_size"], "17");
    assert_eq!(r["results"]["sphere_counts"], serde_json::json!(["1", "4", "12"]));
}

#[test]
fn rerun_hits_cache_with_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let first = hyplab(&["--cache-dir", d, "--radius", "6", "ball"]);
    let second = hyplab(&["--cache-dir", d, "--radius", "6", "ball"]);
    assert_eq!(first.status.code(), Some(0));
    assert!(!stderr(&first).contains("cache hit"));
    assert!(stderr(&second).contains("cache hit: ball"));
    assert_eq!(first.stdout, second.stdout);
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn over_cap_is_an_error() {
    let o = hyplab(&["--radius", "40", "ball"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: experiment ball"), "{}", stderr(&o));
}

#[test]
fn asymmetric_measure_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("mu.txt");
    fs::write(&p, "a 1/2\nb 1/2\n").unwrap();
    let o = hyplab(&["--measure", p.to_str().unwrap(), "green"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("symmetric"), "{}", stderr(&o));
}

#[test]
fn csv_output_and_bad_arguments() {
    let o = hyplab(&["--radius", "3", "--out", "csv", "ball"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("n,count,formula\n0,1,1\n1,4,4\n"));
    assert_eq!(hyplab(&["criterion", "11"]).status.code(), Some(1));
    assert_eq!(hyplab(&["--rank", "1", "ball"]).status.code(), Some(1));
    assert_eq!(hyplab(&["--l", "4", "green-density"]).status.code(), Some(1));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("cfg.json");
    fs::write(&p, r#"{"rank": 3, "radius": 5}"#).unwrap();
    let o = hyplab(&["--config", p.to_str().unwrap(), "--radius", "2", "ball"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["results"]["ball_size"], "37");
}
