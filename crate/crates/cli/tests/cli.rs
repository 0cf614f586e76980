use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use cartan_core::matrix::{expm, C64};
use cartan_core::pauli::{i_times, HamiltonianVector};
use cartan_core::ComplexMatrix;
use serde_json::Value;
use tempfile::TempDir;

fn cartan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cartan")).args(args).env_remove("CARTAN_SEED").output().unwrap()
}

fn cartan_stdin(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_cartan"))
        .args(args)
        .env_remove("CARTAN_SEED")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn json(out: &Output) -> Value {
    assert_eq!(code(out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write_matrix(dir: &Path, name: &str, m: &ComplexMatrix) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string(m).unwrap()).unwrap();
    path
}

fn exp_i(n: usize, terms: &[(&str, f64)]) -> ComplexMatrix {
    expm(&i_times(&HamiltonianVector::from_terms(n, terms).unwrap())).unwrap()
}

fn cnot() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(4);
    for (r, c) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
        m[(r, c)] = C64::new(1.0, 0.0);
    }
    m
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn decompose_identity_gives_zero_factors() {
    let dir = TempDir::new().unwrap();
    let p = write_matrix(dir.path(), "id.json", &ComplexMatrix::identity(4));
    let v = json(&cartan(&["decompose", "-i", p.to_str().unwrap(), "--split", "two_local"]));
    assert!(f(&v["reconstruction_residual"]) < 1e-12);
    for key in ["L", "Z", "M"] {
        for (_, c) in v["factors"][key].as_object().unwrap() {
            assert!(f(c).abs() < 1e-10, "{key} has {c}");
        }
    }
}

#[test]
fn decompose_cnot_reports_removed_phase() {
    let dir = TempDir::new().unwrap();
    let p = write_matrix(dir.path(), "cnot.json", &cnot());
    let v = json(&cartan(&["decompose", "-i", p.to_str().unwrap(), "--split", "two_local"]));
    assert!(f(&v["reconstruction_residual"]) < 1e-8);
    // det(CNOT) = -1, so a quarter-turn phase must have been divided out.
    let phase = f(&v["removed_global_phase"]);
    assert!((phase.abs() - FRAC_PI_4).abs() < 1e-12 || (phase.abs() - 3.0 * FRAC_PI_4).abs() < 1e-12, "{phase}");
}

#[test]
fn non_unitary_input_is_a_precondition_failure() {
    let out = cartan_stdin(
        &["decompose", "--split", "single_x"],
        r#"{"dim":2,"re":[[1,0],[0,2]],"im":[[0,0],[0,0]]}"#,
    );
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("not unitary"));
}

#[test]
fn cost_of_known_gates() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let run = |name: &str, m: &ComplexMatrix, split: &str| {
        let p = write_matrix(d, name, m);
        json(&cartan(&["cost", "-i", p.to_str().unwrap(), "--split", split]))
    };
    let id = run("id.json", &ComplexMatrix::identity(2), "single_x");
    assert_eq!(f(&id["cost"]), 0.0);
    let xx = run("xx.json", &exp_i(2, &[("XX", FRAC_PI_4)]), "two_local");
    assert!((f(&xx["cost"]) - FRAC_PI_2).abs() < 1e-9);
    assert_eq!(xx["convention"], "trace-norm-pauli");
    let z = run("z.json", &exp_i(1, &[("Z", -0.3)]), "single_x");
    assert!((f(&z["cost"]) - SQRT_2 * 0.3).abs() < 1e-9);
    assert_eq!(z["single_qubit"]["convention"], "standard-pauli");
    assert!((f(&z["single_qubit"]["z"]) - 0.3).abs() < 1e-12);
}

#[test]
fn halved_convention_doubles_the_angle_only() {
    let dir = TempDir::new().unwrap();
    let p = write_matrix(dir.path(), "z.json", &exp_i(1, &[("Z", -0.3)]));
    let p = p.to_str().unwrap();
    let v = json(&cartan(&["cost", "-i", p, "--split", "single_x", "--convention", "paper-halved"]));
    assert!((f(&v["single_qubit"]["z"]) - 0.6).abs() < 1e-12);
    assert!((f(&v["cost"]) - SQRT_2 * 0.3).abs() < 1e-9);
    assert!(f(&v["single_qubit"]["closed_form_gap"]) < 1e-12);

    let q = write_matrix(dir.path(), "cnot.json", &cnot());
    let out = cartan(&["cost", "-i", q.to_str().unwrap(), "--split", "two_local", "--convention", "paper-halved"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn dimension_mismatch_and_parse_errors() {
    let dir = TempDir::new().unwrap();
    let p = write_matrix(dir.path(), "cnot.json", &cnot());
    assert_eq!(code(&cartan(&["cost", "-i", p.to_str().unwrap(), "--split", "single_x"])), 3);
    assert_eq!(code(&cartan_stdin(&["cost", "--split", "single_x"], "not json")), 2);
    assert_eq!(code(&cartan(&["cost", "-i", "/nonexistent/u.json", "--split", "single_x"])), 3);
    assert_eq!(code(&cartan(&["cost", "--split", "no_such_split", "-i", p.to_str().unwrap()])), 2);
    assert_eq!(code(&cartan(&["frobnicate"])), 2);
}

#[test]
fn verify_split_ai_passes() {
    let out = cartan(&["verify-split", "--split", "ai", "--n", "3", "--samples", "10"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    assert!(!String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn corrupted_split_lists_violations() {
    let dir = TempDir::new().unwrap();
    // Moving XZ into l breaks [l,l] ⊆ l: [XZ, XY] ∝ IX, which is in p.
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"l":["IY","YI","XY","YX","YZ","ZY","XZ"],"p":["IX","IZ","XI","XX","YY","ZI","ZX","ZZ"],"z":["XX","YY","ZZ"]}"#)
        .unwrap();
    let report = dir.path().join("report.json");
    let out = cartan(&["verify-split", "--split", path.to_str().unwrap(), "-o", report.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("violation"), "{table}");
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["passed"], false);
    assert!(!v["details"]["violations"].as_array().unwrap().is_empty());
}

#[test]
fn verify_metric_reports_off_diagonal_g13() {
    let out = cartan(&["verify-metric", "--split", "single_x", "--epsilon", "0.01", "--points", "2", "-o", "-"]);
    // G13 equals eps at the origin, so the block-diagonal check fails.
    assert_eq!(code(&out), 1);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let checks = v["checks"].as_array().unwrap();
    let by_name = |n: &str| checks.iter().find(|c| c["name"] == n).unwrap()["passed"].as_bool().unwrap();
    assert!(!by_name("off-diagonal blocks vanish"));
    assert!(by_name("G22 = I"));
    assert!(by_name("G11 = eps BCH_L^T BCH_L"));
    let origin = &v["details"]["points"][0]["report"];
    assert!((f(&origin["max_g13"]) - 0.01).abs() < 1e-6);
}

#[test]
fn verify_metric_rejects_bad_parameters() {
    assert_eq!(code(&cartan(&["verify-metric", "--split", "single_x", "--epsilon", "1.5"])), 3);
    assert_eq!(code(&cartan(&["verify-metric", "--split", "single_x", "--fd-step", "0.1"])), 3);
}

#[test]
fn sweep_single_qubit_improves_with_epsilon() {
    let dir = TempDir::new().unwrap();
    let u = &(&exp_i(1, &[("X", 0.3)]) * &exp_i(1, &[("Z", 0.6)])) * &exp_i(1, &[("X", -0.2)]);
    let p = write_matrix(dir.path(), "u.json", &u);
    let csv = dir.path().join("sweep.csv");
    let v = json(&cartan(&["sweep", "-i", p.to_str().unwrap(), "--split", "single_x", "--csv", csv.to_str().unwrap()]));
    let errs: Vec<f64> = v["rows"].as_array().unwrap().iter().map(|r| f(&r["relative_error"])).collect();
    assert_eq!(errs.len(), 3);
    assert!(errs.windows(2).all(|w| w[1] <= w[0]), "{errs:?}");
    assert!(errs[2] < 0.05);
    let text = std::fs::read_to_string(csv).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("epsilon,numeric_cost,endpoint_residual"));
}

#[test]
fn sweep_of_free_move_scales_like_sqrt_epsilon() {
    let dir = TempDir::new().unwrap();
    let p = write_matrix(dir.path(), "x.json", &exp_i(1, &[("X", 0.4)]));
    let v = json(&cartan(&["sweep", "-i", p.to_str().unwrap(), "--split", "single_x"]));
    let costs: Vec<f64> = v["numeric_costs"].as_array().unwrap().iter().map(f).collect();
    for w in costs.windows(2) {
        let ratio = w[0] / w[1];
        assert!(ratio > 10f64.sqrt() / 2.0 && ratio < 10f64.sqrt() * 2.0, "{costs:?}");
    }
}

#[test]
fn sweep_refuses_su4_without_slow() {
    let dir = TempDir::new().unwrap();
    let p = write_matrix(dir.path(), "cnot.json", &cnot());
    let out = cartan(&["sweep", "-i", p.to_str().unwrap(), "--split", "two_local"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--slow"));
    assert!(out.stdout.is_empty());
}

#[test]
fn sweep_rejects_ascending_epsilons() {
    let dir = TempDir::new().unwrap();
    let p = write_matrix(dir.path(), "x.json", &exp_i(1, &[("X", 0.4)]));
    let out = cartan(&["sweep", "-i", p.to_str().unwrap(), "--split", "single_x", "--epsilons", "0.01,0.1"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn output_is_byte_identical_across_runs() {
    let a = cartan(&["random", "--n", "2", "--seed", "11"]);
    let b = cartan(&["random", "--n", "2", "--seed", "11"]);
    assert_eq!(a.stdout, b.stdout);
    let c = cartan(&["random", "--n", "2", "--seed", "12"]);
    assert_ne!(a.stdout, c.stdout);

    let dir = TempDir::new().unwrap();
    let p = dir.path().join("u.json");
    std::fs::write(&p, &a.stdout).unwrap();
    let p = p.to_str().unwrap();
    let x = cartan(&["cost", "-i", p, "--split", "two_local"]);
    let y = cartan(&["cost", "-i", p, "--split", "two_local"]);
    assert_eq!(code(&x), 0);
    assert_eq!(x.stdout, y.stdout);
}

#[test]
fn floats_carry_seventeen_significant_digits() {
    let out = cartan(&["random", "--n", "1", "--seed", "5"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    let first = v["re"][0][0].as_f64().unwrap();
    assert!(text.contains(&format!("{first:.16e}")));
}

#[test]
fn seed_falls_back_to_environment() {
    let flag = cartan(&["random", "--n", "1", "--seed", "9"]);
    let env = Command::new(env!("CARGO_BIN_EXE_cartan"))
        .args(["random", "--n", "1"])
        .env("CARTAN_SEED", "9")
        .output()
        .unwrap();
    assert_eq!(flag.stdout, env.stdout);
}

#[test]
fn random_output_round_trips_through_decompose() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("u.json");
    let out = cartan(&["random", "--n", "3", "--seed", "4", "-o", p.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let v = json(&cartan(&["decompose", "-i", p.to_str().unwrap(), "--split", "ai"]));
    assert!(f(&v["reconstruction_residual"]) < 1e-8);
}
