use std::path::Path;
use std::process::{Command, Output};

use cmdpi_core::harness::{toy_momdp, SweepResult};
use serde_json::Value;

fn cmdpi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmdpi"))
        .args(args)
        .env_remove("CMDPI_SEED")
        .output()
        .expect("spawn cmdpi")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_vi_prints_the_max_j1_vertex() {
    let v = stdout_json(&cmdpi(&["solve", "--env", "builtin:toy", "--method", "vi", "--omega", "1,0"]));
    let j = v["J"].as_array().unwrap();
    assert!((j[0].as_f64().unwrap() - 1.823_443_32).abs() < 1e-8);
    assert_eq!(j[1].as_f64().unwrap(), 0.0);
    assert_eq!(v["method"], "linear_vi");
}

#[test]
fn solve_cmdpi_lands_on_the_front_and_writes_the_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("solve.json");
    let v = stdout_json(&cmdpi(&[
        "solve", "--method", "cmdpi", "--omega", "0.5,0.5", "--tau", "0.1", "--out", path_str(&out),
    ]));
    assert!(v["dist_front"].as_f64().unwrap() <= 1e-3);
    let file: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(file["dist_front"].as_f64().unwrap() <= 1e-3);
    let records = file["trace"]["records"].as_array().unwrap();
    assert_eq!(records.len(), v["iters"].as_u64().unwrap() as usize + 1);
    assert_eq!(file["trace"]["alpha"].as_f64().unwrap(), 10.0);
}

#[test]
fn solve_usage_errors_exit_2() {
    let missing = cmdpi(&["solve", "--method", "cmdpi"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("--omega"));

    let off_simplex = cmdpi(&["solve", "--omega", "0.3,0.3"]);
    assert_eq!(off_simplex.status.code(), Some(2));

    let not_a_number = cmdpi(&["solve", "--omega", "a,b"]);
    assert_eq!(not_a_number.status.code(), Some(2));
}

#[test]
fn solve_runtime_errors_exit_1() {
    let out = cmdpi(&["solve", "--env", "builtin:nope", "--omega", "0.5,0.5"]);
    assert_eq!(out.status.code(), Some(1));
    let out = cmdpi(&["solve", "--env", "/nonexistent/env.json", "--omega", "0.5,0.5"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn seed_environment_variable_overrides_flag() {
    let run = |seed_flag: &str, env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_cmdpi"));
        cmd.args(["solve", "--omega", "0.6,0.4", "--iters", "5", "--seed", seed_flag]);
        match env {
            Some(v) => cmd.env("CMDPI_SEED", v),
            None => cmd.env_remove("CMDPI_SEED"),
        };
        stdout_json(&cmd.output().unwrap())
    };
    let overridden = run("5", Some("7"));
    assert_eq!(overridden["seed"], 7);
    assert_eq!(overridden["J"], run("7", None)["J"]);
    assert_ne!(run("5", None)["J"], overridden["J"]);
}

#[test]
fn sweep_row_counts() {
    let dir = tempfile::tempdir().unwrap();
    let three = dir.path().join("three.csv");
    let out = cmdpi(&["sweep", "--n-prefs", "3", "--method", "vi,cmdpi", "--tau-list", "1,0.1", "--out", path_str(&three)]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&three).unwrap();
    // header + 3 VI rows + 2 taus x 3 CMDPI rows
    assert_eq!(text.lines().count(), 1 + 3 + 6);

    let defaults = dir.path().join("defaults.csv");
    assert!(cmdpi(&["sweep", "--env", "builtin:toy", "--out", path_str(&defaults)]).status.success());
    let text = std::fs::read_to_string(&defaults).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 100);
    for tau in ["1.0000000000000000e0", "1.0000000000000001e-1", "1.0000000000000000e-2"] {
        let rows = text.lines().filter(|l| l.split(',').nth(1) == Some(tau)).count();
        assert_eq!(rows, 100, "tau {tau}");
    }
}

#[test]
fn sweep_json_output_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.json");
    assert!(cmdpi(&["sweep", "--n-prefs", "4", "--method", "capql", "--seeds", "1,2", "--out", path_str(&path)])
        .status
        .success());
    let res = SweepResult::read_json(std::fs::File::open(&path).unwrap()).unwrap();
    assert_eq!(res.rows.len(), 3 * 4 * 2);
    let mut buf = Vec::new();
    res.write_json(&mut buf).unwrap();
    assert_eq!(SweepResult::read_json(buf.as_slice()).unwrap(), res);
}

#[test]
fn sweep_to_stdout_and_bad_paths() {
    let out = cmdpi(&["sweep", "--n-prefs", "2", "--method", "vi"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 3);

    let out = cmdpi(&["sweep", "--n-prefs", "2", "--out", "/nonexistent/dir/out.csv"]);
    assert_eq!(out.status.code(), Some(1));

    let out = cmdpi(&["sweep", "--method", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
    let out = cmdpi(&["sweep", "--n-prefs", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn timing_flag_fills_runtime() {
    let out = cmdpi(&["sweep", "--n-prefs", "2", "--method", "cmdpi", "--tau-list", "0.1", "--timing"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let runtime: f64 = text.lines().nth(1).unwrap().rsplit(',').next().unwrap().parse().unwrap();
    assert!(runtime > 0.0);
}

#[test]
fn verify_single_suite() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = cmdpi(&["verify", "--suite", "bregman", "--report", path_str(&report)]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    let entries = v["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 1);
    assert_eq!(entries[0]["suite"], "bregman");
    for key in ["metric", "bound", "measured", "pass"] {
        assert!(entries[0].get(key).is_some(), "{key}");
    }
    let file: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(file, v);

    assert_eq!(cmdpi(&["verify", "--suite", "nope"]).status.code(), Some(2));
}

#[test]
fn verify_failure_exits_3() {
    // every objective pays its maximum everywhere, so the utopia point is attained
    let dir = tempfile::tempdir().unwrap();
    let env = dir.path().join("flat.json");
    let flat = toy_momdp().with_rewards(2, vec![1.0; 16]).unwrap();
    std::fs::write(&env, flat.to_json_string().unwrap()).unwrap();
    let out = cmdpi(&["verify", "--env", path_str(&env), "--suite", "lipschitz", "--iters", "50"]);
    assert_eq!(out.status.code(), Some(3));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["all_pass"], false);
}

#[test]
fn verify_near_unit_discount_does_not_crash() {
    let dir = tempfile::tempdir().unwrap();
    let env = dir.path().join("slow.json");
    std::fs::write(&env, toy_momdp().with_gamma(0.999).unwrap().to_json_string().unwrap()).unwrap();
    let out = cmdpi(&["verify", "--env", path_str(&env), "--iters", "3", "--rate-iters", "2"]);
    assert!(matches!(out.status.code(), Some(0) | Some(3)), "{:?}", out.status);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["entries"].as_array().unwrap().len(), 5);
}

#[test]
fn metrics_from_points_files() {
    let dir = tempfile::tempdir().unwrap();
    let single = dir.path().join("single.csv");
    std::fs::write(&single, "J_1,J_2\n1,1\n").unwrap();
    let v = stdout_json(&cmdpi(&["metrics", "--points", path_str(&single), "--ref", "0,0"]));
    assert_eq!(v["hypervolume"], 1.0);
    assert_eq!(v["sparsity"], 0.0);

    let plain = dir.path().join("plain.csv");
    std::fs::write(&plain, "x,y\n1,2\n2,1\n").unwrap();
    let v = stdout_json(&cmdpi(&["metrics", "--points", path_str(&plain), "--ref", "0,0", "--prefs", "3"]));
    assert!((v["hypervolume"].as_f64().unwrap() - 3.0).abs() < 1e-12);

    let sweep = dir.path().join("sweep.csv");
    assert!(cmdpi(&["sweep", "--n-prefs", "5", "--method", "vi", "--out", path_str(&sweep)]).status.success());
    let v = stdout_json(&cmdpi(&["metrics", "--points", path_str(&sweep), "--ref-auto"]));
    // the VI vertices include both axis extremes, so the minimum is the origin
    assert_eq!(v["reference_point"], serde_json::json!([0.0, 0.0]));
    assert!(v["hypervolume"].as_f64().unwrap() > 0.0);
}

#[test]
fn metrics_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "J_1,J_2\n1,oops\n").unwrap();
    assert_eq!(cmdpi(&["metrics", "--points", path_str(&bad), "--ref-auto"]).status.code(), Some(2));

    let ragged = dir.path().join("ragged.csv");
    std::fs::write(&ragged, "a,b\n1,2,3\n").unwrap();
    assert_eq!(cmdpi(&["metrics", "--points", path_str(&ragged), "--ref-auto"]).status.code(), Some(2));

    let good = dir.path().join("good.csv");
    std::fs::write(&good, "a,b\n1,2\n").unwrap();
    assert_eq!(cmdpi(&["metrics", "--points", path_str(&good)]).status.code(), Some(2));
    assert_eq!(cmdpi(&["metrics", "--points", path_str(&good), "--ref", "0,0,0"]).status.code(), Some(2));
    assert_eq!(
        cmdpi(&["metrics", "--points", path_str(&good), "--ref", "0,0", "--ref-auto"]).status.code(),
        Some(2)
    );
}
