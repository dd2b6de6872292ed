use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

struct Run {
    out: PathBuf,
    output: Output,
    _dir: TempDir,
}

impl Run {
    fn code(&self) -> i32 {
        self.output.status.code().expect("exited normally")
    }

    fn json(&self, name: &str) -> Value {
        let text = fs::read_to_string(self.out.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        serde_json::from_str(&text).unwrap()
    }

    fn text(&self, name: &str) -> String {
        fs::read_to_string(self.out.join(name)).unwrap()
    }
}

fn codesign(cmd: &str, problem: &str, extra: &[&str], env: &[(&str, &str)]) -> Run {
    let dir = TempDir::new().unwrap();
    let problem_path = dir.path().join("problem.json");
    fs::write(&problem_path, problem).unwrap();
    let out = dir.path().join("out");
    let mut c = Command::new(env!("CARGO_BIN_EXE_codesign"));
    c.arg(cmd).arg("--problem").arg(&problem_path).arg("--out").arg(&out).args(extra);
    c.env_remove("CODESIGN_THREADS");
    for (k, v) in env {
        c.env(k, v);
    }
    let output = c.output().unwrap();
    Run { out, output, _dir: dir }
}

fn raw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_codesign")).args(args).output().unwrap()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

const SCALAR: &str = r#"{"A": [[-1.0]], "epsilon": 3.0, "delta": 3.0, "placement": {"b": [1.0], "c": [1.0]}}"#;

const DIAG3: &str = r#"{
  "A": {"generator": "diag", "eigenvalues": [-1.0, -2.0, -3.0]},
  "epsilon": 0.01, "delta": 0.01,
  "flow": {"rescaled": true, "grad_tol": 1e-10},
  "seed": 5, "starts": 6
}"#;

#[test]
fn scalar_solve_gives_four_ninths() {
    let r = codesign("solve", SCALAR, &[], &[]);
    assert_eq!(r.code(), 0, "{}", String::from_utf8_lossy(&r.output.stderr));
    let doc = r.json("solve.json");
    assert!((f(&doc["phi"]) - 4.0 / 9.0).abs() < 1e-12);
    assert!((f(&doc["K"][0][0]) - 1.0 / 3.0).abs() < 1e-12);
    assert!((f(&doc["Sigma"][0][0]) - 1.0 / 3.0).abs() < 1e-12);
    assert_eq!(doc["pbh"]["detectability"]["pass"], true);
    // Every double is printed with 17 significant digits.
    assert!(r.text("solve.json").contains("4.4444444444444442e-1"), "{}", r.text("solve.json"));
}

#[test]
fn json_round_trips_bit_exactly() {
    let r = codesign("solve", SCALAR, &[], &[]);
    let text = r.text("solve.json");
    let doc: Value = serde_json::from_str(&text).unwrap();
    let again: Value = serde_json::from_str(&serde_json::to_string(&doc).unwrap()).unwrap();
    assert_eq!(doc, again);
    assert_eq!(f(&doc["phi"]).to_bits(), (4.0f64 / 9.0).to_bits());
}

#[test]
fn malformed_problem_is_a_parse_error() {
    assert_eq!(codesign("solve", "{not json", &[], &[]).code(), 2);
    assert_eq!(codesign("solve", r#"{"A": [[1, 2]], "epsilon": 1, "delta": 1}"#, &[], &[]).code(), 2);
    assert_eq!(codesign("solve", r#"{"A": [[-1]], "epsilon": -1, "delta": 1}"#, &[], &[]).code(), 2);
    assert_eq!(codesign("solve", r#"{"A": [[-1]], "epsilon": 1, "delta": 1, "bogus": 0}"#, &[], &[]).code(), 2);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(raw(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(raw(&["solve", "--out", "/tmp/x"]).status.code(), Some(1));
    assert_eq!(raw(&["--help"]).status.code(), Some(0));
    let r = codesign("flow", DIAG3, &["--starts", "0"], &[]);
    assert_eq!(r.code(), 1);
    let r = codesign("solve", SCALAR, &[], &[("CODESIGN_THREADS", "many")]);
    assert_eq!(r.code(), 1);
}

#[test]
fn undetectable_placement_is_a_solver_error() {
    let p = r#"{"A": [[1.0, 0.0], [0.0, -1.0]], "epsilon": 1, "delta": 1,
               "placement": {"b": [1, 0], "c": [0, 1]}}"#;
    let r = codesign("solve", p, &[], &[]);
    assert_eq!(r.code(), 3);
    assert_eq!(r.json("solve.json")["pbh"]["detectability"]["pass"], false);
    assert_eq!(r.json("error.json")["code"], 3);
    assert!(String::from_utf8_lossy(&r.output.stderr).contains("detectability"));
}

#[test]
fn flow_aligns_with_slowest_mode() {
    let r = codesign("flow", DIAG3, &[], &[]);
    assert_eq!(r.code(), 0, "{}", String::from_utf8_lossy(&r.output.stderr));
    let doc = r.json("flow.json");
    let best = &doc["best"];
    assert_eq!(best["status"], "converged");
    assert_eq!(best["stability"]["stability"], "stable");
    for key in ["b", "c"] {
        let v = &best["placement"][key];
        assert!(f(&v[0]).abs() > 1.0 - 1e-8, "{key} = {v}");
    }
    let csv = r.text("trace.csv");
    let header = csv.lines().next().unwrap();
    assert_eq!(header, "iter,phi,grad_norm,step,b1,b2,b3,c1,c2,c3");
    let last: Vec<&str> = csv.lines().last().unwrap().split(',').collect();
    let phi_last: f64 = last[1].parse().unwrap();
    assert!((phi_last - f(&best["phi"])).abs() == 0.0);
}

#[test]
fn flow_is_deterministic_across_runs_and_threads() {
    let a = codesign("flow", DIAG3, &["--seed", "11"], &[("CODESIGN_THREADS", "1")]);
    let b = codesign("flow", DIAG3, &["--seed", "11"], &[("CODESIGN_THREADS", "4")]);
    let c = codesign("flow", DIAG3, &["--seed", "11"], &[("CODESIGN_THREADS", "0")]);
    for r in [&a, &b, &c] {
        assert_eq!(r.code(), 0);
    }
    assert_eq!(fs::read(a.out.join("trace.csv")).unwrap(), fs::read(b.out.join("trace.csv")).unwrap());
    assert_eq!(fs::read(a.out.join("trace.csv")).unwrap(), fs::read(c.out.join("trace.csv")).unwrap());
    assert_eq!(a.text("flow.json"), b.text("flow.json"));
}

#[test]
fn flow_with_unstable_plant_and_no_actuation_fails_every_start() {
    let p = r#"{"A": [[0.5, 0.0], [0.0, -1.0]], "epsilon": 0.0, "delta": 1.0, "starts": 3}"#;
    assert_eq!(codesign("flow", p, &[], &[]).code(), 4);
}

#[test]
fn equilibria_two_by_two() {
    let p = r#"{"A": {"generator": "diag", "eigenvalues": [-1.0, -2.0]}, "epsilon": 0, "delta": 0}"#;
    let r = codesign("equilibria", p, &[], &[]);
    assert_eq!(r.code(), 0, "{}", String::from_utf8_lossy(&r.output.stderr));
    let doc = r.json("equilibria.json");
    let cands = doc["candidates"].as_array().unwrap();
    let kind = |k: &str| cands.iter().filter(|c| c["kind"] == k).count();
    assert_eq!(kind("common_support"), 3);
    assert_eq!(kind("disjoint_support"), 2);
    assert_eq!(doc["stable_count"], 1);
    let stable = cands.iter().find(|c| c["stability"]["stability"] == "stable").unwrap();
    assert_eq!(stable["support_beta"], serde_json::json!([0]));
}

#[test]
fn equilibria_dimension_cap() {
    let eigs: Vec<String> = (1..=13).map(|i| format!("-{i}.0")).collect();
    let p = format!(r#"{{"A": {{"generator": "diag", "eigenvalues": [{}]}}, "epsilon": 0, "delta": 0}}"#, eigs.join(","));
    assert_eq!(codesign("equilibria", &p, &[], &[]).code(), 5);
}

#[test]
fn laplacian_minimum_is_the_uniform_vector() {
    let p = r#"{"A": {"generator": "laplacian", "nodes": 4, "edges": [[0,1,1],[1,2,1],[2,3,1]]},
               "epsilon": 1.0, "delta": 1.0}"#;
    let r = codesign("equilibria", p, &[], &[]);
    assert_eq!(r.code(), 0, "{}", String::from_utf8_lossy(&r.output.stderr));
    let doc = r.json("equilibria.json");
    assert_eq!(doc["mode"], "eigenvector_pairs");
    assert_eq!(doc["stable_count"], 1);
    let cands = doc["candidates"].as_array().unwrap();
    let stable = cands.iter().find(|c| c["stability"]["stability"] == "stable").unwrap();
    for key in ["b", "c"] {
        for x in stable["placement"][key].as_array().unwrap() {
            assert!((f(x) - 0.5).abs() < 1e-12, "{key}: {x}");
        }
    }
    let min = f(&doc["analytic_minimum"]);
    assert!((f(&stable["phi"]) - min).abs() < 1e-9 * min.abs());
}

#[test]
fn simulate_scalar_matches_phi() {
    let p = r#"{"A": [[-1.0]], "epsilon": 3.0, "delta": 3.0, "placement": {"b": [1.0], "c": [1.0]},
               "sim": {"dt": 0.002, "horizon_t": 100.0, "burn_in": 10.0, "n_paths": 32}, "seed": 3}"#;
    let r = codesign("simulate", p, &[], &[]);
    assert_eq!(r.code(), 0, "{}", String::from_utf8_lossy(&r.output.stderr));
    let doc = r.json("simulate.json");
    assert!((f(&doc["phi_reference"]) - 4.0 / 9.0).abs() < 1e-12);
    let z = f(&doc["z_score"]);
    assert!(z.abs() < 4.0, "z = {z}");
}

#[test]
fn simulate_rejects_zero_paths_and_reports_divergence() {
    let zero = r#"{"A": [[-1.0]], "epsilon": 1, "delta": 1, "sim": {"n_paths": 0}}"#;
    assert_eq!(codesign("simulate", zero, &[], &[]).code(), 1);
    let blowup = r#"{"A": [[-1.0]], "epsilon": 1, "delta": 1,
                    "sim": {"dt": 2.5, "horizon_t": 2000.0, "burn_in": 0.0, "n_paths": 4}}"#;
    assert_eq!(codesign("simulate", blowup, &[], &[]).code(), 6);
}

#[test]
fn verify_random_suite_passes() {
    let p = r#"{"A": {"generator": "random_symmetric", "n": 3}, "epsilon": 0.5, "delta": 0.8, "seed": 9}"#;
    let r = codesign("verify", p, &[], &[]);
    assert_eq!(r.code(), 0, "{}", String::from_utf8_lossy(&r.output.stderr));
    let doc = r.json("verify.json");
    assert_eq!(doc["pass"], true);
    for c in doc["checks"].as_array().unwrap() {
        assert_eq!(c["status"], "pass", "{c}");
    }
}

#[test]
fn verify_detects_wrong_gradient() {
    let p = r#"{"A": {"generator": "random_symmetric", "n": 3}, "epsilon": 0.5, "delta": 0.8, "seed": 9}"#;
    let r = codesign("verify", p, &["--inject-wrong-gradient"], &[]);
    assert_ne!(r.code(), 0);
    let doc = r.json("verify.json");
    assert_eq!(doc["pass"], false);
    assert_eq!(doc["checks"][0]["status"], "fail");
}

#[test]
fn verify_scalar_and_zero_gain() {
    let r = codesign("verify", SCALAR, &[], &[]);
    assert_eq!(r.code(), 0, "{}", String::from_utf8_lossy(&r.output.stderr));
    let p = r#"{"A": {"generator": "random_symmetric", "n": 3}, "epsilon": 0, "delta": 0, "seed": 2}"#;
    let r = codesign("verify", p, &[], &[]);
    assert_eq!(r.code(), 0, "{}", String::from_utf8_lossy(&r.output.stderr));
}

