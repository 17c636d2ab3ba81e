//! End-to-end runs of the `cara` binary: exit codes, report shape, output
//! options and determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn cara(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cara")).args(args).output().unwrap()
}

fn report(out: &Output) -> Value {
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(doc["envelope"]["timestamp"].is_u64());
    doc["report"].clone()
}

fn run(args: &[&str]) -> (i32, Value) {
    let out = cara(args);
    (out.status.code().unwrap(), report(&out))
}

#[test]
fn metric_at_origin_is_the_norm() {
    let (code, r) = run(&["metric", fixture("metric_sup2.json").to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["caratheodory"], 1.0);
    assert_eq!(r["result"]["kobayashi"], 1.0);
}

#[test]
fn metric_at_a_point_of_the_polydisk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    std::fs::write(
        &path,
        r#"{"norm": {"kind": "sup", "dim": 2}, "vector": [[1, 0], [0, 0]], "point": [[0.5, 0], [0, 0]]}"#,
    )
    .unwrap();
    let (code, r) = run(&["metric", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    let value = r["result"]["caratheodory"].as_f64().unwrap();
    assert!((value - 4.0 / 3.0).abs() < 1e-12, "{value}");
}

#[test]
fn isometry_verdicts() {
    let (code, r) = run(&["check-isometry", fixture("bent_embedding.json").to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["verdict"]["is_isometry"], true);

    let (code, _) = run(&["check-isometry", fixture("plane_sup.json").to_str().unwrap()]);
    assert_eq!(code, 0, "the plane is isometric under the pullback source norm");

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.json");
    std::fs::write(
        &path,
        r#"{"L": [[[1,0],[0,0]], [[0,0],[1,0]], [[1,0],[1,0]]],
            "source_norm": {"kind": "sup", "dim": 2}, "target_norm": {"kind": "sup", "dim": 3}}"#,
    )
    .unwrap();
    let (code, r) = run(&["check-isometry", path.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert_eq!(r["status"], "refuted");
    assert_eq!(r["result"]["verdict"]["exact_refutation"], true);
}

#[test]
fn find_projection_constructs_or_refutes() {
    let (code, r) = run(&["find-projection", fixture("bent_embedding.json").to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["method"], "support_index");
    assert_eq!(r["result"]["bundle"]["norm_certificate"]["value"], 1.0);
    for res in r["result"]["residuals"].as_array().unwrap() {
        assert!(res["value"].as_f64().unwrap() <= res["limit"].as_f64().unwrap());
    }

    let (code, r) = run(&["find-projection", fixture("plane_sup.json").to_str().unwrap()]);
    assert_eq!(code, 1);
    assert_eq!(r["error"]["kind"], "no_norm_one_projection");
}

#[test]
fn min_projection_norm_of_the_plane() {
    let (code, r) = run(&["min-projection-norm", fixture("plane_sup.json").to_str().unwrap()]);
    assert_eq!(code, 1);
    let value = r["result"]["min_projection"]["value"].as_f64().unwrap();
    assert!((value - 4.0 / 3.0).abs() < 1e-4);
}

#[test]
fn retract_half_square() {
    let (code, r) = run(&["retract", fixture("half_square.json").to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["method"], "support_index");
    assert!(r["result"]["retraction"]["verification"]["residuals"].as_array().unwrap().len() >= 8);
}

#[test]
fn counterexample_is_refuted() {
    let (code, r) = run(&["counterexample"]);
    assert_eq!(code, 1);
    assert_eq!(r["result"]["obstruction"]["no_norm_one_projection"], true);
}

#[test]
fn corollary_demo_verifies() {
    let (code, r) = run(&["corollary-demo"]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["builtin_fixture"], true);
    assert_eq!(r["result"]["retractions"].as_array().unwrap().len(), 2);
}

#[test]
fn invalid_inputs_exit_two() {
    let out = cara(&["metric", "/nonexistent/input.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(report(&out)["status"], "invalid-input");

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"norm": {"kind": "sup", "dim": 2}, "vector": [[1, 0]]}"#).unwrap();
    let (code, r) = run(&["metric", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert_eq!(r["error"]["kind"], "dimension");

    std::fs::write(&bad, "not json").unwrap();
    assert_eq!(run(&["retract", bad.to_str().unwrap()]).0, 2);

    let (code, _) = run(&["counterexample", "--tol", "-1"]);
    assert_eq!(code, 2);
}

#[test]
fn reports_are_deterministic_in_the_seed() {
    let input = fixture("bent_embedding.json");
    let args = ["find-projection", input.to_str().unwrap(), "--seed", "7"];
    let a = report(&cara(&args));
    let b = report(&cara(&args));
    assert_eq!(a, b);
    assert_eq!(a["options"]["seed"], 7);
}

#[test]
fn out_and_text_format() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.txt");
    let out = cara(&["counterexample", "--format", "text", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("report.status: \"refuted\""));
    assert!(text.contains("envelope.version: "));
}
