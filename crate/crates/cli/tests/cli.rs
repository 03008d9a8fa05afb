use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use glmp_core::GlmpInstance;
use serde_json::Value;

const INSTANCE_A: &str = r#"{"name":"A","n":2,"m":5,
  "A":[[-1,-1],[1,0],[0,1],[-1,0],[0,-1]],"b":[-1,1,1,0,0],
  "terms":[{"c":[1,0],"d":1,"alpha":1},{"c":[0,1],"d":1,"alpha":1}]}"#;

const INSTANCE_B: &str = r#"{"name":"B","n":1,"m":2,"A":[[1],[-1]],"b":[2,0],
  "terms":[{"c":[1],"d":1,"alpha":1},{"c":[-1],"d":3,"alpha":-1}]}"#;

fn glmpbb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glmpbb"))
        .args(args)
        .env_remove("GLMPBB_LOG")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn solves_instance_a() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.json", INSTANCE_A);
    let out = glmpbb(&["solve", &a, "--eps", "1e-4"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["status"], "EpsOptimal");
    assert!((v["h_value"].as_f64().unwrap() - 2.0).abs() < 1e-3);
}

#[test]
fn solves_instance_b() {
    let dir = tempfile::tempdir().unwrap();
    let b = write(dir.path(), "b.json", INSTANCE_B);
    let out = glmpbb(&["solve", &b, "--eps", "1e-4"]);
    assert_eq!(out.status.code(), Some(0));
    assert!((json(&out)["h_value"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-3);
}

#[test]
fn missing_field_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"name":"x","n":1,"m":1,"A":[[1]],"b":[1]}"#);
    let out = glmpbb(&["solve", &bad]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("terms") && err.contains("line"), "{err}");
}

#[test]
fn violations_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    let ray = write(
        dir.path(),
        "ray.json",
        r#"{"name":"ray","n":1,"m":1,"A":[[-1]],"b":[0],"terms":[{"c":[1],"d":1,"alpha":1}]}"#,
    );
    let out = glmpbb(&["solve", &ray]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unbounded"));
}

#[test]
fn bad_flags_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.json", INSTANCE_A);
    assert_eq!(glmpbb(&["solve", &a, "--eps", "-1"]).status.code(), Some(1));
    assert_eq!(glmpbb(&["solve", &a, "--eps", "1e-3", "--sub-tol", "1e-3"]).status.code(), Some(1));
    assert_eq!(glmpbb(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(glmpbb(&["--help"]).status.code(), Some(0));
}

#[test]
fn limits_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.json", INSTANCE_A);
    let out = glmpbb(&["solve", &a, "--max-iters", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["status"], "IterLimit");
}

#[test]
fn trace_and_out_files() {
    let dir = tempfile::tempdir().unwrap();
    let gen = glmpbb(&["generate", "--scheme", "p3", "--m", "6", "--n", "4", "--p", "3", "--pbar", "2", "--seed", "3"]);
    assert_eq!(gen.status.code(), Some(0));
    let inst = write(dir.path(), "p3.json", &String::from_utf8(gen.stdout).unwrap());
    let traces: Vec<String> = (0..2)
        .map(|k| {
            let trace = dir.path().join(format!("trace{k}.csv"));
            let result = dir.path().join(format!("result{k}.json"));
            let out = glmpbb(&[
                "solve",
                &inst,
                "--eps",
                "1e-5",
                "--trace",
                trace.to_str().unwrap(),
                "--out",
                result.to_str().unwrap(),
            ]);
            assert_eq!(out.status.code(), Some(0));
            assert!(out.stdout.is_empty());
            let v: Value = serde_json::from_str(&fs::read_to_string(&result).unwrap()).unwrap();
            let text = fs::read_to_string(&trace).unwrap();
            assert_eq!(text.lines().count() as u64, v["iterations"].as_u64().unwrap() + 1);
            text
        })
        .collect();
    assert!(traces[0].starts_with("k,lb,ub,gap,active_nodes,node_diameter\n"));
    assert_eq!(traces[0], traces[1]);
}

#[test]
fn generate_is_deterministic_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p1.json");
    let args = ["generate", "--scheme", "p1", "--m", "10", "--n", "20", "--seed", "1"];
    let first = glmpbb(&args);
    let second = glmpbb(&args);
    assert_eq!(first.stdout, second.stdout);
    let mut with_out = args.to_vec();
    with_out.extend(["--out", path.to_str().unwrap()]);
    assert_eq!(glmpbb(&with_out).status.code(), Some(0));
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.as_bytes(), first.stdout.as_slice());
    let loaded = GlmpInstance::from_json(&text).unwrap();
    assert_eq!(loaded.to_json() + "\n", text);
    let report = glmp_core::validate(&loaded, glmp_core::model::DEFAULT_DELTA_POS).unwrap();
    assert!(report.is_valid());
}

#[test]
fn generate_sets_sign_count() {
    let out = glmpbb(&["generate", "--scheme", "p3", "--m", "5", "--n", "3", "--p", "3", "--pbar", "1", "--seed", "9"]);
    let inst = GlmpInstance::from_json(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    assert_eq!(glmp_core::partition_terms(&inst).unwrap().p_bar(), 1);
}

#[test]
fn bench_single_repeat_matches_solve() {
    let dir = tempfile::tempdir().unwrap();
    let gen_flags = ["--scheme", "p3", "--m", "6", "--n", "4", "--p", "3", "--pbar", "2", "--seed", "11"];
    let mut bench = vec!["bench", "--repeats", "1", "--eps", "1e-4"];
    bench.extend(gen_flags);
    let out = glmpbb(&bench);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("scheme,m,n,p,p_bar,repeats,solved,avg_iter,avg_time,opt_val")
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();

    let mut gen = vec!["generate"];
    gen.extend(gen_flags);
    let inst = write(dir.path(), "i.json", &String::from_utf8(glmpbb(&gen).stdout).unwrap());
    let solved = json(&glmpbb(&["solve", &inst, "--eps", "1e-4"]));
    assert_eq!(row[7].parse::<f64>().unwrap(), solved["iterations"].as_f64().unwrap());
    assert_eq!(row[9].parse::<f64>().unwrap(), solved["h_value"].as_f64().unwrap());
}

#[test]
fn bench_averages_per_run_values() {
    let dir = tempfile::tempdir().unwrap();
    let runs = dir.path().join("runs.csv");
    let out = glmpbb(&[
        "bench", "--scheme", "p1", "--m", "6", "--n", "8", "--repeats", "5", "--jobs", "2", "--eps", "1e-3",
        "--runs", runs.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let mut summary = csv::Reader::from_reader(out.stdout.as_slice());
    let row = summary.records().next().unwrap().unwrap();
    let mut per_run = csv::Reader::from_path(&runs).unwrap();
    assert_eq!(per_run.headers().unwrap(), vec!["seed", "status", "iterations", "time", "h_value"]);
    let records: Vec<csv::StringRecord> = per_run.records().map(|r| r.unwrap()).collect();
    assert_eq!(records.len(), 5);
    let mean = |col: usize| records.iter().map(|r| r[col].parse::<f64>().unwrap()).sum::<f64>() / 5.0;
    assert_eq!(row[7].parse::<f64>().unwrap(), mean(2));
    assert_eq!(row[9].parse::<f64>().unwrap(), mean(4));
    let seeds: Vec<&str> = records.iter().map(|r| r.get(0).unwrap()).collect();
    assert_eq!(seeds, ["0", "1", "2", "3", "4"]);
}

#[test]
fn oracle_reports_both_references() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.json", INSTANCE_A);
    let out = glmpbb(&["oracle", &a, "--resolution", "50"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["vertex"]["h_value"], 2.0);
    assert!((v["grid"]["h_value"].as_f64().unwrap() - 2.0).abs() < 1e-9);

    let b = write(dir.path(), "b.json", INSTANCE_B);
    let v = json(&glmpbb(&["oracle", &b, "--resolution", "100"]));
    assert!(v["vertex"].is_null());
    assert_eq!(v["notes"].as_array().unwrap().len(), 1);
}
