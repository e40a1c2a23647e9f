//! End-to-end tests of the `gridplace` binary: exit codes, output formats,
//! and determinism of the fixture generator.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gridplace"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary should launch")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout should be UTF-8")
}

/// Generates a grid file and returns its path.
fn gen_grid(dir: &Path, name: &str, args: &[&str]) -> std::path::PathBuf {
    let path = dir.join(name);
    let mut full = vec!["gen"];
    full.extend_from_slice(args);
    full.push("-o");
    let path_str = path.to_str().unwrap();
    full.push(path_str);
    let out = run(&full);
    assert!(out.status.success(), "gen failed: {:?}", out);
    path
}

#[test]
fn gen_is_deterministic_and_validates() {
    let first = run(&["gen", "--topology", "tree", "--n", "9", "--seed", "42"]);
    let second = run(&["gen", "--topology", "tree", "--n", "9", "--seed", "42"]);
    let other = run(&["gen", "--topology", "tree", "--n", "9", "--seed", "43"]);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout, "same seed, same grid");
    assert_ne!(first.stdout, other.stdout, "different seed, different grid");

    let dir = tempfile::tempdir().unwrap();
    let grid = gen_grid(
        dir.path(),
        "tree9.json",
        &["--topology", "tree", "--n", "9", "--seed", "42"],
    );
    let out = run(&["validate", grid.to_str().unwrap()]);
    assert!(out.status.success(), "validate failed: {:?}", out);
    let text = stdout(&out);
    assert!(text.contains("buses: 9"), "unexpected summary: {text}");
    assert!(text.contains("connected: yes"));
}

#[test]
fn measure_reports_closed_form_and_oracle_agreement() {
    let dir = tempfile::tempdir().unwrap();
    let grid = gen_grid(
        dir.path(),
        "ring6.json",
        &[
            "--topology",
            "ring",
            "--n",
            "6",
            "--seed",
            "1",
            "--lambda2",
            "1.0",
        ],
    );
    let out = run(&[
        "measure",
        grid.to_str().unwrap(),
        "--all",
        "--gamma",
        "0.5",
        "--delta-p",
        "0.2",
        "--method",
        "both",
    ]);
    assert!(out.status.success(), "measure failed: {:?}", out);
    let report: Value = serde_json::from_str(&stdout(&out)).expect("JSON report");
    assert_eq!(report["format_version"], "1");
    let rows = report["rows"].as_array().expect("rows array");
    assert_eq!(rows.len(), 6);
    let mut last = f64::NEG_INFINITY;
    for row in rows {
        let measure = row["measure"].as_f64().unwrap();
        assert!(measure >= last, "rows must be sorted ascending");
        last = measure;
        let discrepancy = row["discrepancy"].as_f64().unwrap();
        assert!(
            discrepancy < 1e-6,
            "closed form and oracle disagree: {discrepancy}"
        );
    }
}

#[test]
fn optimize_combined_emits_feasible_placement() {
    let dir = tempfile::tempdir().unwrap();
    let grid = gen_grid(
        dir.path(),
        "tree9.json",
        &[
            "--topology",
            "tree",
            "--n",
            "9",
            "--seed",
            "5",
            "--jitter",
            "0.5",
        ],
    );
    let placement = dir.path().join("placement.json");
    let out = run(&[
        "optimize",
        grid.to_str().unwrap(),
        "--target",
        "combined",
        "--delta-p",
        "0.2",
        "-o",
        placement.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "optimize failed: {:?}", out);

    let text = std::fs::read_to_string(&placement).unwrap();
    let file: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(file["format_version"], "1");
    assert_eq!(file["algorithm"], "combined");
    assert_eq!(file["residuals"], serde_json::json!([0, 0, 0]));
    for key in ["r", "a"] {
        let v = file[key].as_array().unwrap();
        assert_eq!(v.len(), 9);
        assert!(v.iter().all(|x| [-1, 0, 1].contains(&x.as_i64().unwrap())));
    }
    assert!(file["objective_linear"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn report_shows_strict_reduction_for_damping_placement() {
    let dir = tempfile::tempdir().unwrap();
    // A heterogeneous tree: the spread in per-bus susceptibilities is what
    // the first-order placement exploits, and here it dominates the
    // placement-sign-independent O(g²) shift.
    let grid = gen_grid(
        dir.path(),
        "tree12.json",
        &[
            "--topology",
            "tree",
            "--n",
            "12",
            "--seed",
            "11",
            "--jitter",
            "0.8",
            "--lambda2",
            "0.5",
        ],
    );
    let placement = dir.path().join("placement.json");
    let out = run(&[
        "optimize",
        grid.to_str().unwrap(),
        "--target",
        "damping",
        "--gamma",
        "0.5",
        "--delta-p",
        "0.2",
        "-o",
        placement.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "optimize failed: {:?}", out);

    let report_path = dir.path().join("report.json");
    let out = run(&[
        "report",
        grid.to_str().unwrap(),
        "--placement",
        placement.to_str().unwrap(),
        "--gamma",
        "0.5",
        "--delta-p",
        "0.2",
        "--g",
        "0.1",
        "-o",
        report_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "report failed: {:?}", out);
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    let before = report["vulnerability_before"].as_f64().unwrap();
    let after = report["vulnerability_after"].as_f64().unwrap();
    assert!(
        after < before,
        "damping placement must reduce vulnerability"
    );
    assert_eq!(report["curve"].as_array().unwrap().len(), 12);
}

#[test]
fn simulate_writes_trajectory_with_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let grid = gen_grid(
        dir.path(),
        "ring5.json",
        &[
            "--topology",
            "ring",
            "--n",
            "5",
            "--seed",
            "2",
            "--lambda2",
            "1.0",
        ],
    );
    let traj = dir.path().join("traj.csv");
    let out = run(&[
        "simulate",
        grid.to_str().unwrap(),
        "--bus",
        "b1",
        "--delta-p",
        "0.2",
        "--dt",
        "0.01",
        "--horizon",
        "2.0",
        "-o",
        traj.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "simulate failed: {:?}", out);

    let csv = std::fs::read_to_string(&traj).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("t,omega_b0,omega_b1,omega_b2,omega_b3,omega_b4")
    );
    assert_eq!(lines.count(), 201, "2 s at dt = 0.01 plus the initial row");

    let sidecar: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("traj.json")).unwrap())
            .unwrap();
    assert_eq!(sidecar["fault_bus"], "b1");
    assert_eq!(sidecar["dt"], 0.01);
    assert_eq!(sidecar["modal"], false);
}

#[test]
fn validation_failures_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "not a grid").unwrap();
    let out = run(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let grid = gen_grid(
        dir.path(),
        "ring5.json",
        &["--topology", "ring", "--n", "5", "--seed", "0"],
    );
    let out = run(&["measure", grid.to_str().unwrap(), "--bus", "nosuch"]);
    assert_eq!(out.status.code(), Some(2), "unknown bus is a user error");

    // Heterogeneous damping ratios without --gamma cannot use closed forms.
    let hetero = gen_grid(
        dir.path(),
        "hetero.json",
        &[
            "--topology",
            "ring",
            "--n",
            "5",
            "--seed",
            "0",
            "--hetero-inertia",
        ],
    );
    let out = run(&["sensitivities", hetero.to_str().unwrap(), "--gamma", "1.0"]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "non-uniform inertia needs --homogenize"
    );
    let out = run(&[
        "sensitivities",
        hetero.to_str().unwrap(),
        "--gamma",
        "1.0",
        "--homogenize",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "--homogenize restores the baseline"
    );
}

#[test]
fn numerical_failures_exit_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    // A perfectly symmetric star has a repeated eigenvalue, which the
    // perturbation formulas must refuse.
    let grid = gen_grid(
        dir.path(),
        "star_sym.json",
        &[
            "--topology",
            "star",
            "--n",
            "6",
            "--seed",
            "0",
            "--jitter",
            "0",
            "--injection-scale",
            "0",
        ],
    );
    let out = run(&["sensitivities", grid.to_str().unwrap(), "--gamma", "0.5"]);
    assert_eq!(out.status.code(), Some(3));
    let msg = String::from_utf8_lossy(&out.stderr).to_string();
    assert!(msg.contains("degenerate"), "unexpected error: {msg}");
}

#[test]
fn schema_flag_documents_output_formats() {
    let out = run(&["--schema"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for needle in [
        "format_version",
        "spectrum CSV",
        "trajectory CSV",
        "placement",
    ] {
        assert!(text.contains(needle), "schema is missing {needle}");
    }
}
