//! End-to-end tests against the compiled binary and the shipped scenarios.

use std::path::PathBuf;
use std::process::{Command, Output};

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_curvbench")
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(binary())
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn verify_exits_zero_with_json_on_stdout() {
    let out = run(&[
        "verify",
        "--scenario",
        scenario("verify-rational.json").to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["verdict"], "OK");
    assert_eq!(json["task"], "verify");
}

#[test]
fn solve_generator_reports_solution() {
    let out = run(&[
        "solve",
        "--scenario",
        scenario("solve-generator.json").to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["verdict"], "SOLUTION");
    let c = json["recovered_C"].as_f64().unwrap();
    assert!((c - 1.0).abs() < 1e-7);
    assert_eq!(json["completeness"], "complete");
}

#[test]
fn nonexistent_exits_two() {
    let out = run(&[
        "solve",
        "--scenario",
        scenario("solve-separable.json").to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr(&out));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["verdict"], "NONEXISTENT");
    assert_eq!(json["witness"]["witness"], "theorem43");
}

#[test]
fn classify_reports_family() {
    let out = run(&[
        "classify",
        "--scenario",
        scenario("classify-sphere.json").to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["recovered_family"]["lambda"], -4.0);
    assert_eq!(json["singular_set"]["kind"], "empty");
}

#[test]
fn curvature_csv_table() {
    let out = run(&[
        "curvature",
        "--scenario",
        scenario("curvature-quadratic.json").to_str().unwrap(),
        "--format",
        "csv",
        "--quiet",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert_eq!(
        header,
        "x1,x2,x3,scalar,ric_11,ric_12,ric_13,ric_21,ric_22,ric_23,ric_31,ric_32,ric_33,K_12,K_13,K_23"
    );
    assert_eq!(lines.count(), 27);
}

#[test]
fn example_subcommand_runs_catalog_entry() {
    let out = run(&["example", "--id", "corollary45-ex2", "--quiet"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["verdict"], "OK");
    let notes = json["notes"].as_array().unwrap();
    assert!(notes.iter().any(|n| n
        .as_str()
        .unwrap()
        .contains("all catalog expectations hold")));
}

#[test]
fn example_scenario_file_round_trip() {
    let out = run(&[
        "example",
        "--scenario",
        scenario("example-hyperbolic.json").to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["verdict"], "SOLUTION");
}

#[test]
fn example_list_prints_ids() {
    let out = run(&["example", "--list"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for id in [
        "corollary45-ex1",
        "corollary45-ex2",
        "corollary45-ex3",
        "theorem42-sphere",
        "theorem43-separable",
        "hyperbolic-halfspace",
    ] {
        assert!(text.contains(id), "missing {id} in listing");
    }
}

#[test]
fn wrong_subcommand_for_task_is_an_error() {
    let out = run(&[
        "solve",
        "--scenario",
        scenario("verify-rational.json").to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn residual_in_the_gap_exits_three() {
    let dir = std::env::temp_dir().join("curvbench-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("indeterminate.json");
    std::fs::write(
        &path,
        r#"{
            "schema_version": 1,
            "task": "verify",
            "n": 3,
            "tensor": ["4*x1^2 - 2 + 0.000001", "-2*x1^2", "-2*x1^2"],
            "phi": "1/(1+x1^2)"
        }"#,
    )
    .unwrap();
    let out = run(&["verify", "--scenario", path.to_str().unwrap(), "--quiet"]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr(&out));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["verdict"], "INDETERMINATE");
    std::fs::remove_file(&path).ok();
}

#[test]
fn repeated_runs_are_byte_identical_across_thread_counts() {
    let path = scenario("verify-rational.json");
    let args = ["verify", "--scenario", path.to_str().unwrap(), "--quiet"];
    let baseline = run(&args).stdout;
    for threads in ["1", "3", "8"] {
        let out = Command::new(binary())
            .args(args)
            .env("CURVBENCH_THREADS", threads)
            .output()
            .expect("binary runs");
        assert_eq!(out.stdout, baseline, "thread count {threads}");
    }
}

#[test]
fn out_flag_writes_file() {
    let dir = std::env::temp_dir().join("curvbench-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.json");
    let out = run(&[
        "classify",
        "--scenario",
        scenario("classify-sphere.json").to_str().unwrap(),
        "--out",
        path.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(json["verdict"], "OK");
    std::fs::remove_file(&path).ok();
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).to_string()
}
