//! End-to-end tests of the `maxdet` binary: output schemas, exit codes,
//! structured errors and byte-level determinism.

use std::path::Path;
use std::process::{Command, Output};

fn maxdet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxdet"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn maxdet_with_threads(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxdet"))
        .args(args)
        .env("MAXDET_CERTIFY_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn write_matrix(path: &Path, rows: &[[f64; 2]; 2]) {
    let json = serde_json::json!({
        "dim": 2,
        "rows": [[rows[0][0], rows[0][1]], [rows[1][0], rows[1][1]]],
    });
    std::fs::write(path, json.to_string()).unwrap();
}

#[test]
fn lambert_grid_includes_branch_point() {
    let out = maxdet(&[
        "lambert",
        "--min=-0.36787944117144233",
        "--max=-0.1",
        "--count",
        "3",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "x,w0,wm1,lower,upper,sandwich_ok");
    let first = lines.next().unwrap();
    assert!(
        first.starts_with("-3.6787944117144233e-1,-1.0000000000000000e0,-1.0000000000000000e0,")
    );
    assert!(first.ends_with(",true"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn lambert_dense_grid_has_no_sandwich_violations() {
    let out = maxdet(&[
        "lambert",
        "--min=-0.36787944117144233",
        "--max=-1e-9",
        "--count",
        "10000",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 10_001);
    for line in text.lines().skip(1) {
        assert!(line.ends_with(",true"), "violation row: {line}");
    }
}

#[test]
fn lambert_empty_grid_emits_header_only() {
    let out = maxdet(&["lambert", "--min=-0.3", "--max=-0.2", "--count", "0"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "x,w0,wm1,lower,upper,sandwich_ok\n");
}

#[test]
fn lambert_rejects_bad_range() {
    let out = maxdet(&["lambert", "--min=-0.5", "--max=-0.1", "--count", "3"]);
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_str(stderr(&out).trim()).unwrap();
    assert_eq!(err["error"], "OutOfDomain");
}

#[test]
fn certify_identity_zero_gap() {
    let dir = tempfile::tempdir().unwrap();
    let xf = dir.path().join("xf.json");
    write_matrix(&xf, &[[1.0, 0.0], [0.0, 1.0]]);
    let out = maxdet(&["certify", "--xf", xf.to_str().unwrap(), "--epsilon", "0"]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let cert: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(cert["epsilon"], 0.0);
    assert_eq!(cert["frobenius_bound"], 0.0);
    assert_eq!(cert["vacuous"], false);
    assert_eq!(cert["spectral_norm_xf"], 1.0);
}

#[test]
fn certify_computes_gap_from_reference() {
    let dir = tempfile::tempdir().unwrap();
    let xf = dir.path().join("xf.json");
    let xstar = dir.path().join("xstar.json");
    // logdet(diag(2,2)) - logdet(diag(1,1)) = 2 ln 2.
    write_matrix(&xf, &[[1.0, 0.0], [0.0, 1.0]]);
    write_matrix(&xstar, &[[2.0, 0.0], [0.0, 2.0]]);
    let out = maxdet(&[
        "certify",
        "--xf",
        xf.to_str().unwrap(),
        "--xstar",
        xstar.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let cert: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let eps = cert["epsilon"].as_f64().unwrap();
    assert!((eps - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
    // Certificate must cover the actual squared error ||X*-X_f||_F^2 = 4.
    let bound = cert["frobenius_bound"].as_f64().unwrap();
    assert!(bound >= 4.0);

    // Swapped roles: negative raw gap clamps to zero.
    let out = maxdet(&[
        "certify",
        "--xf",
        xstar.to_str().unwrap(),
        "--xstar",
        xf.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let cert: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(cert["epsilon"], 0.0);
}

#[test]
fn certify_rejects_non_spd() {
    let dir = tempfile::tempdir().unwrap();
    let xf = dir.path().join("bad.json");
    write_matrix(&xf, &[[1.0, 0.0], [0.0, -1.0]]);
    let out = maxdet(&["certify", "--xf", xf.to_str().unwrap(), "--epsilon", "0.1"]);
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_str(stderr(&out).trim()).unwrap();
    assert_eq!(err["error"], "NotPositiveDefinite");
}

#[test]
fn certify_rejects_asymmetric_input() {
    let dir = tempfile::tempdir().unwrap();
    let xf = dir.path().join("asym.json");
    std::fs::write(&xf, r#"{"dim":2,"rows":[[1.0,0.5],[0.1,1.0]]}"#).unwrap();
    let out = maxdet(&["certify", "--xf", xf.to_str().unwrap(), "--epsilon", "0"]);
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_str(stderr(&out).trim()).unwrap();
    assert_eq!(err["error"], "InvalidInput");
}

#[test]
fn mvee_solves_generated_instance() {
    let out = maxdet(&[
        "--seed", "5", "mvee", "--dim", "3", "--count", "12", "--delta", "1e-6",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let ell: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(ell["x"]["dim"], 3);
    assert_eq!(ell["b"].as_array().unwrap().len(), 3);
    assert!(ell["logdet_x"].as_f64().unwrap().is_finite());
}

#[test]
fn mvee_reads_points_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("points.csv");
    std::fs::write(&path, "1,0\n-1,0\n0,1\n0,-1\n").unwrap();
    let out = maxdet(&[
        "mvee",
        "--points",
        path.to_str().unwrap(),
        "--delta",
        "1e-8",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let ell: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    // Unit circle: X = I, b = 0.
    let rows = ell["x"]["rows"].as_array().unwrap();
    assert!((rows[0][0].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!(rows[0][1].as_f64().unwrap().abs() < 1e-9);
    assert!(ell["b"][0].as_f64().unwrap().abs() < 1e-9);
}

#[test]
fn mvee_rejects_degenerate_points() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("line.csv");
    std::fs::write(&path, "0,0\n1,1\n2,2\n3,3\n").unwrap();
    let out = maxdet(&["mvee", "--points", path.to_str().unwrap()]);
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_str(stderr(&out).trim()).unwrap();
    assert_eq!(err["error"], "DegeneratePoints");
}

#[test]
fn experiment_is_deterministic_and_validated() {
    let args = [
        "--seed",
        "42",
        "experiment",
        "--dim",
        "4",
        "--count",
        "16",
        "--tolerances",
        "1e-1,1e-3,1e-6",
    ];
    let first = maxdet(&args);
    assert!(first.status.success(), "stderr: {}", stderr(&first));
    let second = maxdet(&args);
    assert_eq!(
        stdout(&first),
        stdout(&second),
        "same seed must agree byte-for-byte"
    );

    let mut other_seed = args;
    other_seed[1] = "43";
    let third = maxdet(&other_seed);
    assert_ne!(stdout(&first), stdout(&third), "different seed must differ");

    let text = stdout(&first);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "delta,epsilon,normalized_error,bound_exact,bound_closed,holds"
    );
    let mut previous_eps = f64::INFINITY;
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 6);
        assert_eq!(fields[5], "true");
        let eps: f64 = fields[1].parse().unwrap();
        assert!(eps <= previous_eps + 1e-10);
        previous_eps = eps;
    }
}

#[test]
fn experiment_output_independent_of_worker_count() {
    let args = [
        "--seed",
        "9",
        "experiment",
        "--dim",
        "3",
        "--count",
        "12",
        "--tolerances",
        "1e-1,1e-3,1e-6",
    ];
    let sequential = maxdet_with_threads(&args, "1");
    let threaded = maxdet_with_threads(&args, "4");
    assert!(sequential.status.success());
    assert!(threaded.status.success());
    assert_eq!(stdout(&sequential), stdout(&threaded));
}

#[test]
fn experiment_json_format() {
    let out = maxdet(&[
        "--seed",
        "1",
        "--format",
        "json",
        "experiment",
        "--dim",
        "3",
        "--count",
        "10",
        "--tolerances",
        "1e-1,1e-5",
    ]);
    assert!(out.status.success());
    let rows: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["holds"], true);
}

#[test]
fn experiment_rejects_invalid_shape_before_solving() {
    let out = maxdet(&["experiment", "--dim", "5", "--count", "4"]);
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_str(stderr(&out).trim()).unwrap();
    assert_eq!(err["error"], "InvalidShape");
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rows.csv");
    let out = maxdet(&[
        "--seed",
        "2",
        "--out",
        path.to_str().unwrap(),
        "experiment",
        "--dim",
        "3",
        "--count",
        "10",
        "--tolerances",
        "1e-1,1e-5",
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    assert!(written.starts_with("delta,epsilon,"));
}
