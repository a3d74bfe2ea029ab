use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ialpha"));
    c.env("APT_NUM_THREADS", "2");
    c
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn write(dir: &TempDir, name: &str, contents: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn entropy_examples() {
    let dir = TempDir::new().unwrap();
    let u = write(&dir, "u.json", r#"{"p": [0.5, 0.5]}"#);
    let p = write(&dir, "p.json", r#"{"p": [0.75, 0.25]}"#);
    let out = run(&["entropy", "--input", s(&u), "--alpha", "2"]);
    assert_eq!(code(&out), 0);
    assert!((num(&json(&out)["renyi_entropy"]) - 2f64.ln()).abs() < 1e-11);
    let out = run(&["entropy", "--input", s(&p), "--alpha", "2"]);
    let v = json(&out);
    assert!((num(&v["renyi_entropy"]) - 0.4700036292).abs() < 1e-10);
    assert_eq!(v["support_size"], 2);
}

#[test]
fn malformed_input_names_the_field() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", r#"{"p": [0.5, -0.5, 1.0]}"#);
    let out = run(&["entropy", "--input", s(&bad), "--alpha", "2"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("p[1]"));
    let csv = write(&dir, "bad.csv", "point,p\na,0.5\nb,oops\n");
    let out = run(&["entropy", "--input", s(&csv), "--alpha", "2"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("p[1]"));
}

#[test]
fn csv_input_is_accepted() {
    let dir = TempDir::new().unwrap();
    let csv = write(&dir, "p.csv", "point,mu_weight,p\n1,1,0.75\n2,1,0.25\n");
    let out = run(&["entropy", "--input", s(&csv), "--alpha", "2"]);
    assert_eq!(code(&out), 0);
    assert!((num(&json(&out)["renyi_entropy"]) - 0.4700036292).abs() < 1e-10);
}

#[test]
fn divergence_examples() {
    let dir = TempDir::new().unwrap();
    let u = write(&dir, "u.json", r#"{"p": [0.5, 0.5]}"#);
    let p = write(&dir, "p.json", r#"{"p": [0.75, 0.25]}"#);
    let out = run(&["divergence", "--input", s(&p), "--ref", s(&p), "--alpha", "0.5"]);
    assert_eq!(code(&out), 0);
    assert!(num(&json(&out)["value"]).abs() < 1e-14);
    let out = run(&["divergence", "--input", s(&p), "--ref", s(&u), "--alpha", "2"]);
    let v = json(&out);
    assert!((num(&v["value"]) - 0.2231435513).abs() < 1e-10);
    assert!(num(&v["path_delta"]) <= 1e-9);
}

#[test]
fn disjoint_support_is_infinite() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", r#"{"p": [1, 0]}"#);
    let q = write(&dir, "q.json", r#"{"p": [0, 1]}"#);
    let out = run(&["divergence", "--input", s(&p), "--ref", s(&q), "--alpha", "0.5"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["value"], "+inf");
    assert_eq!(v["finite"], false);
}

#[test]
fn path_disagreement_exits_3() {
    let dir = TempDir::new().unwrap();
    let u = write(&dir, "u.json", r#"{"p": [0.5, 0.5]}"#);
    let p = write(&dir, "p.json", r#"{"p": [0.75, 0.25]}"#);
    // A negative tolerance can never be met.
    let out = run(&["divergence", "--input", s(&p), "--ref", s(&u), "--alpha", "2", "--tol", "path_agreement=-1"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn invalid_alpha_and_unknown_tolerance() {
    let dir = TempDir::new().unwrap();
    let u = write(&dir, "u.json", r#"{"p": [0.5, 0.5]}"#);
    assert_eq!(code(&run(&["entropy", "--input", s(&u), "--alpha", "1"])), 5);
    assert_eq!(code(&run(&["entropy", "--input", s(&u), "--alpha=-1"])), 5);
    assert_eq!(code(&run(&["divergence", "--input", s(&u), "--ref", s(&u), "--alpha", "2", "--tol", "nope=1"])), 2);
    assert_eq!(code(&run(&["entropy", "--input", s(&u)])), 2);
}

#[test]
fn config_file_is_strict() {
    let dir = TempDir::new().unwrap();
    let u = write(&dir, "u.json", r#"{"p": [0.5, 0.5]}"#);
    let good = write(&dir, "good.json", r#"{"alpha": 2, "seed": 3}"#);
    let out = run(&["entropy", "--input", s(&u), "--config", s(&good)]);
    assert_eq!(code(&out), 0);
    let bad = write(&dir, "bad.json", r#"{"alpha": 2, "colour": "red"}"#);
    let out = run(&["entropy", "--input", s(&u), "--config", s(&bad)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn project_matches_oracle_fixture() {
    let dir = TempDir::new().unwrap();
    let q_path = dir.path().join("q.json");
    let out = run(&[
        "project",
        "--input",
        s(&fixture("moment_r.json")),
        "--constraints",
        s(&fixture("moment_constraints.json")),
        "--alpha",
        "2",
        "--q-output",
        s(&q_path),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let expected: Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("moment_expected.json")).unwrap()).unwrap();
    let q: Vec<f64> = v["q"]["p"].as_array().unwrap().iter().map(num).collect();
    let eq: Vec<f64> = expected["q"].as_array().unwrap().iter().map(num).collect();
    let tv: f64 = 0.5 * q.iter().zip(&eq).map(|(a, b)| (a - b).abs()).sum::<f64>();
    assert!(tv <= 1e-4, "{q:?} vs {eq:?}");
    assert!((num(&v["value"]) - num(&expected["value"])).abs() <= 1e-6);
    assert_eq!(v["converged"], true);
    assert_eq!(v["certificate_passed"], true);
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&q_path).unwrap()).unwrap();
    assert_eq!(written["p"], v["q"]["p"]);
}

#[test]
fn project_reference_inside_the_set() {
    let dir = TempDir::new().unwrap();
    let r = write(&dir, "r.json", r#"{"points": [1, 2, 3], "p": [0.2, 0.2, 0.6]}"#);
    let c = write(&dir, "c.json", r#"{"equalities": [{"statistic": [1, 2, 3], "target": 2.4}]}"#);
    let out = run(&["project", "--input", s(&r), "--constraints", s(&c), "--alpha", "0.5"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert!(num(&v["value"]).abs() < 1e-9);
    let q: Vec<f64> = v["q"]["p"].as_array().unwrap().iter().map(num).collect();
    for (a, b) in q.iter().zip([0.2, 0.2, 0.6]) {
        assert!((a - b).abs() < 1e-7);
    }
}

#[test]
fn project_infeasible_exits_4() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "c.json", r#"{"equalities": [{"statistic": [1, 2, 3], "target": 4}]}"#);
    let out = run(&["project", "--input", s(&fixture("moment_r.json")), "--constraints", s(&c), "--alpha", "2"]);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("infeasible"));
}

#[test]
fn project_non_convergence_exits_6() {
    let dir = TempDir::new().unwrap();
    let out_path = dir.path().join("report.json");
    let out = run(&[
        "project",
        "--input",
        s(&fixture("moment_r.json")),
        "--constraints",
        s(&fixture("moment_constraints.json")),
        "--alpha",
        "2",
        "--max-iterations",
        "1",
        "--output",
        s(&out_path),
    ]);
    assert_eq!(code(&out), 6);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["converged"], false);
}

#[test]
fn maxent_closed_form() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "spec.json", r#"{"n": 1, "alpha": 2, "C": [[1]]}"#);
    let density = dir.path().join("g.csv");
    let out = run(&["maxent", "--input", s(&spec), "--density-output", s(&density), "--format", "csv"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert!((num(&v["z"]) - 4.0 * 5f64.sqrt() / 3.0).abs() < 1e-6);
    assert!((num(&v["support_half_widths"][0]) - 5f64.sqrt()).abs() < 1e-10);
    assert!(num(&v["covariance_relative_deviation"]) < 0.01);
    let csv = std::fs::read_to_string(&density).unwrap();
    assert!(csv.starts_with("point,mu_weight,p\n"));
}

#[test]
fn maxent_alpha_out_of_range() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "spec.json", r#"{"n": 2, "alpha": 0.5, "C": [[1, 0], [0, 1]]}"#);
    let out = run(&["maxent", "--input", s(&spec)]);
    assert_eq!(code(&out), 5);
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha out of range"));
}

#[test]
fn verify_is_deterministic() {
    let args = ["verify", "parallelogram", "--samples", "200", "--seed", "11", "--alpha", "0.5"];
    let a = run(&args);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    let b = bin().env("APT_NUM_THREADS", "0").args(args).output().unwrap();
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["suite"], "parallelogram");
    assert_eq!(v["passed"], true);
}

#[test]
fn verify_parallelogram_alpha_half() {
    let out = run(&["verify", "parallelogram", "--samples", "1000", "--seed", "0", "--alpha", "0.5"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let gap = v["checks"].as_array().unwrap().iter().find(|c| c["name"] == "gap_sign").unwrap();
    assert_eq!(gap["violations"], 0);
}

#[test]
fn verify_failing_check_exits_3() {
    let out = run(&["verify", "limits", "--samples", "5", "--tol", "bound_factor=0"]);
    assert_eq!(code(&out), 3);
    assert_eq!(json(&out)["passed"], false);
}

#[test]
fn verify_unknown_suite() {
    assert_eq!(code(&run(&["verify", "nonsense"])), 2);
}
