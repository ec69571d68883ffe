use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gladssn::harness::{read_trace, CSV_HEADER};
use gladssn::trace::{Trace, TraceRecord};

fn gladssn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gladssn"))
        .args(args)
        .env_remove("GLADSSN_SEED")
        .output()
        .expect("spawn gladssn")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn without_wall(trace: &Trace) -> Vec<TraceRecord> {
    trace
        .records
        .iter()
        .map(|r| TraceRecord {
            wall_ns: 0,
            ..r.clone()
        })
        .collect()
}

#[test]
fn run_quad_to_tight_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("quad.csv");
    let out = gladssn(&[
        "run",
        "--problem",
        "quad",
        "--solver",
        "gladssn",
        "--p",
        "0.5",
        "--m",
        "1",
        "--seed",
        "7",
        "--tol",
        "1e-10",
        "--out",
        path_str(&out_path),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&out_path).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    let trace = read_trace(&out_path).unwrap();
    assert!(trace.len() <= 30, "{} rows", trace.len());
    assert!(trace.terminal.g_k <= 1e-10);

    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["exit_code"], 0);
    assert_eq!(summary["iterations"], trace.len());
}

#[test]
fn lazy_svm_counts_hessians() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("svm.csv");
    let out = gladssn(&[
        "run",
        "--problem",
        "svm",
        "--solver",
        "gladssn",
        "--m",
        "5",
        "--scale",
        "reduced",
        "--out",
        path_str(&out_path),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let trace = read_trace(&out_path).unwrap();
    let k_last = trace.records.last().unwrap().k as u64;
    assert_eq!(trace.terminal.hess_evals, k_last / 5 + 1);
}

#[test]
fn bad_configuration_exits_with_one() {
    assert_eq!(code(&gladssn(&["run"])), 1);
    assert_eq!(code(&gladssn(&["run", "--problem", "lasso"])), 1);
    assert_eq!(code(&gladssn(&["run", "--problem", "quad", "--m", "0"])), 1);
    assert_eq!(code(&gladssn(&["run", "--problem", "quad", "--p", "2"])), 1);
    assert_eq!(code(&gladssn(&["frobnicate"])), 1);

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"problem": "quad", "lambda": 1.0}"#).unwrap();
    let out = gladssn(&["run", "--config", path_str(&cfg)]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("lambda"));

    let missing = Command::new(env!("CARGO_BIN_EXE_gladssn"))
        .args(["run", "--problem", "quad"])
        .env("GLADSSN_SEED", "seven")
        .output()
        .unwrap();
    assert_eq!(code(&missing), 1);
}

#[test]
fn iteration_cap_exits_with_two() {
    let out = gladssn(&["run", "--problem", "quad", "--max-outer", "1"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn help_exits_cleanly() {
    let out = gladssn(&["--help"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("estimate-order"));
}

#[test]
fn config_file_flags_and_seed_env() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let from_env = dir.path().join("env.json");
    let from_flag = dir.path().join("flag.json");
    fs::write(
        &cfg,
        r#"{"problem": "huber", "p": 0.0, "m": 2, "Lambda0": 3.0, "seed": 1, "emit": "json", "scale": "reduced"}"#,
    )
    .unwrap();

    let out = Command::new(env!("CARGO_BIN_EXE_gladssn"))
        .args(["run", "--config", path_str(&cfg), "--out-path", path_str(&from_env)])
        .env("GLADSSN_SEED", "9")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["seed"], 9);
    assert_eq!(summary["m"], 2);

    let out = gladssn(&[
        "run",
        "--config",
        path_str(&cfg),
        "--seed",
        "9",
        "--out",
        path_str(&from_flag),
    ]);
    assert_eq!(code(&out), 0);
    assert!(fs::read_to_string(&from_flag).unwrap().trim_start().starts_with('{'));
    let a = read_trace(&from_env).unwrap();
    let b = read_trace(&from_flag).unwrap();
    assert_eq!(without_wall(&a), without_wall(&b));
    assert_eq!(a.records[0].big_lambda_k, 3.0);
}

#[test]
fn verify_and_estimate_order_on_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let trace_path = dir.path().join("svm.csv");
    let out = gladssn(&[
        "run",
        "--problem",
        "svm",
        "--scale",
        "reduced",
        "--seed",
        "2",
        "--out",
        path_str(&trace_path),
    ]);
    assert_eq!(code(&out), 0);

    let out = gladssn(&["verify", path_str(&trace_path), "--m", "1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let checks = report["checks"].as_array().unwrap();
    let inner = checks.iter().find(|c| c["name"] == "accept_inner").unwrap();
    assert_eq!(inner["violations"], 0);
    assert!(inner["worst_k"].is_u64());

    let out = gladssn(&["estimate-order", path_str(&trace_path)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let est: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(est["q"].as_f64().unwrap() >= 1.3);
}

#[test]
fn verify_flags_a_corrupted_row() {
    let dir = tempfile::tempdir().unwrap();
    let trace_path = dir.path().join("quad.csv");
    assert_eq!(
        code(&gladssn(&["run", "--problem", "quad", "--out", path_str(&trace_path)])),
        0
    );

    let text = fs::read_to_string(&trace_path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut fields: Vec<String> = lines[2].split(',').map(String::from).collect();
    let f: f64 = fields[5].parse().unwrap();
    fields[5] = format!("{:?}", f + 1e3);
    lines[2] = fields.join(",");
    fs::write(&trace_path, lines.join("\n") + "\n").unwrap();

    let out = gladssn(&["verify", path_str(&trace_path)]);
    assert_eq!(code(&out), 4);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let decrease = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "accept_decrease")
        .unwrap();
    assert_eq!(decrease["first_violation_k"], 0);
}

#[test]
fn verify_rejects_malformed_traces() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "k,j_k\n0,1\n").unwrap();
    assert_eq!(code(&gladssn(&["verify", path_str(&bad)])), 1);
    assert_eq!(code(&gladssn(&["estimate-order", path_str(&bad)])), 1);
}

#[test]
fn estimate_order_needs_a_clean_tail() {
    let dir = tempfile::tempdir().unwrap();
    let trace_path = dir.path().join("short.csv");
    assert_eq!(
        code(&gladssn(&[
            "run",
            "--problem",
            "quad",
            "--max-outer",
            "1",
            "--out",
            path_str(&trace_path)
        ])),
        2
    );
    assert_eq!(code(&gladssn(&["estimate-order", path_str(&trace_path)])), 4);
}

#[test]
fn compare_sweeps_hessian_period() {
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("summary.csv");
    let traces = dir.path().join("traces");
    let out = gladssn(&[
        "compare",
        "--problem",
        "svm",
        "--scale",
        "reduced",
        "--m",
        "1,2,4,5,10",
        "--grad-tol",
        "0",
        "--max-outer",
        "13",
        "--out",
        path_str(&summary),
        "--trace-dir",
        path_str(&traces),
    ]);
    let text = fs::read_to_string(&summary).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 5);
    let iterations: Vec<u64> = rows.iter().map(|r| r[col("iterations")].parse().unwrap()).collect();
    let hess: Vec<u64> = rows.iter().map(|r| r[col("hess_evals")].parse().unwrap()).collect();
    assert!(iterations.iter().all(|&k| k == 13), "{iterations:?}");
    assert!(hess.windows(2).all(|w| w[0] > w[1]), "{hess:?}");
    assert_eq!(code(&out), 2);
    assert_eq!(fs::read_dir(&traces).unwrap().count(), 5);
}

#[test]
fn compare_propagates_member_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("configs.json");
    fs::write(
        &cfg,
        r#"[{"problem": "quad"}, {"problem": "quad", "max_outer": 1}, {"problem": "quad", "solver": "armijo", "max_outer": 3}]"#,
    )
    .unwrap();
    let out = gladssn(&["compare", "--config", path_str(&cfg)]);
    assert_eq!(code(&out), 2);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 4);
    assert!(stdout.lines().next().unwrap().starts_with("label,"));

    assert_eq!(code(&gladssn(&["compare", "--problem", "quad"])), 1);
}

#[test]
fn exported_instance_replays_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("nmf.txt");
    let direct = dir.path().join("direct.csv");
    let replay = dir.path().join("replay.csv");
    let out = gladssn(&[
        "export",
        "--problem",
        "nmf",
        "--scale",
        "reduced",
        "--seed",
        "4",
        "--out",
        path_str(&inst),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(fs::read_to_string(&inst).unwrap().starts_with("gladssn-instance"));

    let common = ["--problem", "nmf", "--scale", "reduced", "--max-outer", "15"];
    let mut a = vec!["run", "--seed", "4", "--out", path_str(&direct)];
    a.extend(common);
    let mut b = vec!["run", "--instance", path_str(&inst), "--out", path_str(&replay)];
    b.extend(common);
    let (ra, rb) = (gladssn(&a), gladssn(&b));
    assert_eq!(code(&ra), code(&rb));
    assert_eq!(
        without_wall(&read_trace(&direct).unwrap()),
        without_wall(&read_trace(&replay).unwrap())
    );

    let out = gladssn(&["run", "--problem", "svm", "--instance", path_str(&inst)]);
    assert_eq!(code(&out), 1);
}
