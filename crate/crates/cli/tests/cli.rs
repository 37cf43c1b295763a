use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const E1: &str = r#"{"dim": 2, "Lambda": [[1, 0]], "Q": [[1, 0], [0, 1]],
  "R": [[1, 0], [0, 1]], "S": [[1, 0], [0, 2]], "scenario": "exact"}"#;

const L1_SINGLE: &str = r#"{"Lambda": [[1, 0]], "Q": [[1, 0], [0, 1]], "R": [[1, 0], [0, 1]],
  "epsilon": 1, "eta": 0.5, "scenario": "l1"}"#;

const L1_FAILS: &str = r#"{"Lambda": [[0.44, -0.54, 0.89], [0.8, -0.94, -0.95], [0.08, 0.88, -0.24]],
  "Q": [[-0.57, -0.16, -0.94]],
  "R": [[-0.56, -0.12, -0.01], [-0.53, -0.54, -0.56], [-0.08, -0.42, -0.96]],
  "epsilon": 1.0, "eta": 1.72, "scenario": "l1"}"#;

fn orecover(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orecover"))
        .args(args)
        .env("ORECOVER_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn certificate(dir: &TempDir, problem: &str, name: &str) -> (PathBuf, PathBuf, Output) {
    let p = write(dir, &format!("{name}.json"), problem);
    let c = dir.path().join(format!("{name}.cert.json"));
    let out = orecover(&["radius", s(&p), "--json-out", s(&c)]);
    (p, c, out)
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn e1_radius_certificate() {
    let dir = TempDir::new().unwrap();
    let (_, cert, out) = certificate(&dir, E1, "e1");
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&cert);
    let r = v["radius_sq"].as_f64().unwrap();
    assert!((r - 0.25).abs() < 1e-9);
    let sum = v["a_sharp"].as_f64().unwrap() + v["b_sharp"].as_f64().unwrap();
    assert!((r - sum).abs() < 1e-15);
    assert_eq!(v["input_hash"].as_str().unwrap().len(), 64);
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn certificates_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let (_, c1, _) = certificate(&dir, E1, "a");
    let (_, c2, _) = certificate(&dir, E1, "b");
    assert_eq!(std::fs::read(c1).unwrap(), std::fs::read(c2).unwrap());
}

#[test]
fn apply_e1_map() {
    let dir = TempDir::new().unwrap();
    let (_, cert, _) = certificate(&dir, E1, "e1");
    let out = orecover(&["apply", s(&cert), "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("f_hat: 3.000000000000e0 0.000000000000e0"), "{text}");
    assert!(text.contains("Q_f_hat: 3.000000000000e0 0.000000000000e0"), "{text}");

    let zero = orecover(&["apply", s(&cert), "0"]);
    assert!(stdout(&zero).contains("f_hat: 0.000000000000e0 0.000000000000e0"));

    let wrong = orecover(&["apply", s(&cert), "1", "2"]);
    assert_eq!(wrong.status.code(), Some(1));
    assert!(stderr(&wrong).contains("DimensionMismatch"));
}

#[test]
fn oracle_confirms_and_catches_tampering() {
    let dir = TempDir::new().unwrap();
    let (p, cert, _) = certificate(&dir, E1, "e1");
    let out = orecover(&["oracle", s(&p), s(&cert), "--budget", "10000"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let gap_line = stdout(&out).lines().find(|l| l.starts_with("gap:")).unwrap().to_string();
    let gap: f64 = gap_line.trim_start_matches("gap:").trim().parse().unwrap();
    assert!(gap.abs() <= 1e-3);

    let mut v = json(&cert);
    let halved = v["radius_sq"].as_f64().unwrap() / 2.0;
    v["radius_sq"] = serde_json::json!(halved);
    let tampered = write(&dir, "tampered.json", &v.to_string());
    let out = orecover(&["oracle", s(&p), s(&tampered)]);
    assert_eq!(out.status.code(), Some(3), "{}", stdout(&out));
    assert!(stderr(&out).contains("soundness"));
}

#[test]
fn oracle_rejects_foreign_certificate() {
    let dir = TempDir::new().unwrap();
    let (_, cert, _) = certificate(&dir, E1, "e1");
    let other = write(&dir, "other.json", &E1.replace("[0, 2]", "[0, 3]"));
    let out = orecover(&["oracle", s(&other), s(&cert)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("hash mismatch"));
}

#[test]
fn zero_quantity_gives_zero() {
    let dir = TempDir::new().unwrap();
    let problem = E1.replace(r#""Q": [[1, 0], [0, 1]]"#, r#""Q": [[0, 0]]"#);
    let (p, cert, out) = certificate(&dir, &problem, "zero");
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(json(&cert)["radius_sq"].as_f64(), Some(0.0));
    let out = orecover(&["oracle", s(&p), s(&cert)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("oracle value: 0.000000000000e0"));
}

#[test]
fn rank_deficient_observations() {
    let dir = TempDir::new().unwrap();
    let problem = E1.replace(r#""Lambda": [[1, 0]]"#, r#""Lambda": [[1, 0], [2, 0]]"#);
    let (_, _, out) = certificate(&dir, &problem, "rd");
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("RankDeficient"), "{}", stderr(&out));
}

#[test]
fn malformed_file_reports_line() {
    let dir = TempDir::new().unwrap();
    let (_, _, out) = certificate(&dir, "{\n  \"Q\": [[1, 0]],\n  \"Lambda\": oops\n}", "bad");
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}

#[test]
fn l1_single_observation_holds() {
    let dir = TempDir::new().unwrap();
    let (p, cert, out) = certificate(&dir, L1_SINGLE, "l1");
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&cert);
    assert_eq!(v["l1"]["verdict"], "Holds");
    assert_eq!(v["status"], "Optimal");
    let out = orecover(&["oracle", s(&p), s(&cert)]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn l1_condition_failure_is_best_effort() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "fails.json", L1_FAILS);
    let c = dir.path().join("fails.cert.json");
    let out = orecover(&["radius", s(&p), "--json-out", s(&c), "--full-M-table"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    let v = json(&c);
    assert_eq!(v["status"], "BestEffort");
    assert!(v["radius_sq"].is_null());
    assert!(v["lower_bound"].as_f64().unwrap() < v["upper_bound"].as_f64().unwrap());
    let table = v["l1"]["m_table"].as_array().unwrap();
    assert_eq!(table.len(), 3);
    assert!(table.iter().all(|row| row.as_array().unwrap().iter().all(|x| x.is_f64())));
    let out = orecover(&["oracle", s(&p), s(&c)]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
}

#[test]
fn export_sdpa_block_structure() {
    let dir = TempDir::new().unwrap();
    let problem = r#"{"Lambda": [[1, 0]], "Q": [[1, 0], [0, 1]], "R": [[2, 0], [0, 1]],
      "epsilon": 1, "eta": 0.3, "scenario": "l1"}"#;
    let p = write(&dir, "l1.json", problem);
    let out_path = dir.path().join("l1.dat-s");
    let out = orecover(&["export-sdpa", s(&p), s(&out_path)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = std::fs::read_to_string(&out_path).unwrap();
    let header: Vec<&str> = text.lines().filter(|l| !l.starts_with('*')).take(3).collect();
    assert_eq!(header, ["5", "2", "5 -3"]);
}

#[test]
fn export_sdpa_usage_and_io_errors() {
    let dir = TempDir::new().unwrap();
    let e1 = write(&dir, "e1.json", E1);
    let out = orecover(&["export-sdpa", s(&e1), s(&dir.path().join("x.dat-s"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("needs scenario \"l1\""));

    let l1 = write(&dir, "l1.json", L1_SINGLE);
    let out = orecover(&["export-sdpa", s(&l1), s(&dir.path().join("missing/dir/x.dat-s"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("IoFailure"));
}

#[test]
fn minimax_reaches_lower_bound() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "l1.json", L1_SINGLE);
    let j = dir.path().join("mm.json");
    let out = orecover(&["minimax", s(&p), "--iters", "50", "--json-out", s(&j)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&j);
    let (value, lb) = (v["value"].as_f64().unwrap(), v["lower_bound"].as_f64().unwrap());
    assert!((value - lb).abs() <= 1e-6 * (1.0 + lb));
    assert_eq!(v["converged"], true);
}

#[test]
fn diagnose_n_projectors() {
    let dir = TempDir::new().unwrap();
    // rank-one projectors onto lines at 0, 60 and 120 degrees
    let h = 3f64.sqrt() / 2.0;
    let problem = format!(
        r#"{{"Q": [[1, 0], [0, 1]], "R_list": [[[1, 0]], [[0.5, {h}]], [[-0.5, {h}]]]}}"#
    );
    let p = write(&dir, "hex.json", &problem);
    let out = orecover(&["diagnose-n", s(&p)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("verdict: NotExact"), "{text}");
}

#[test]
fn scenarios_dispatch() {
    let dir = TempDir::new().unwrap();
    let l2 = r#"{"Lambda": [[1, 0]], "Q": [[1, 0], [0, 1]], "R": [[1, 0], [0, 1]], "S": [[1]],
      "epsilon": 0.7, "eta": 0.2, "scenario": "l2"}"#;
    let (p, c, out) = certificate(&dir, l2, "l2");
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!((json(&c)["radius_sq"].as_f64().unwrap() - 0.49).abs() < 1e-10);
    assert_eq!(orecover(&["oracle", s(&p), s(&c)]).status.code(), Some(0));

    let mixed = r#"{"Lambda": [[1, 0], [0, 1]], "Q": [[1, 0], [0, 1]], "R": [[1, 0], [0, 1]],
      "Sprime": [[1, 0]], "Sdoubleprime": [[0, 1]], "epsilon": 0.6, "eta": 0.3, "scenario": "mixed"}"#;
    let (p, c, out) = certificate(&dir, mixed, "mixed");
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!((json(&c)["radius_sq"].as_f64().unwrap() - 0.09).abs() < 1e-10);
    assert_eq!(orecover(&["oracle", s(&p), s(&c)]).status.code(), Some(0));

    let two = r#"{"dim": 3, "Lambda": [[1, 0, 0]], "Q": [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
      "V": [[1, 0, 0]], "W": [[0, 1, 0]], "scenario": "two-space"}"#;
    let (p, c, out) = certificate(&dir, two, "two");
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(orecover(&["oracle", s(&p), s(&c)]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(orecover(&["bogus"]).status.code(), Some(1));
    assert_eq!(orecover(&["radius"]).status.code(), Some(1));
    assert_eq!(orecover(&["--help"]).status.code(), Some(0));
}
