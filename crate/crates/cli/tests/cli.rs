use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use charfock::io::{colligation_to_json, lifting_to_json, rowcon_to_json, series_to_json, to_pretty};
use charfock::rowcon::{char_symbol, popescu_colligation};
use charfock::testgen::{
    conjugate_row, random_minimal_lifting, random_strict_row_contraction, random_unitary,
    rng_from_seed,
};
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_charfock"))
        .args(args)
        .env_remove("CHARFOCK_SEED")
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn example_reports_closed_form() {
    let out = run(&["examples", "--which", "5.2", "--tol", "1e-10"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("θ_{C,E} = [√2/√3, z/√3]"), "{text}");
}

#[test]
fn all_examples_pass() {
    let out = run(&["examples"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn unknown_example_is_invalid_input() {
    assert_eq!(run(&["examples", "--which", "9.9"]).status.code(), Some(2));
}

#[test]
fn coisometry_of_popescu_colligation() {
    let dir = TempDir::new().unwrap();
    let t = random_strict_row_contraction(&mut rng_from_seed(4), 3, 2, 0.3, 0.9);
    let w = popescu_colligation(&t).unwrap();
    let p = write(&dir, "w.json", &to_pretty(&colligation_to_json(&w)));
    assert_eq!(run(&["check", "coisom", s(&p)]).status.code(), Some(0));
    assert_eq!(run(&["check", "observable", s(&p)]).status.code(), Some(0));
}

#[test]
fn malformed_json_is_invalid_input() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "bad.json", "{\"dim\": 2, \"arity\": ");
    let out = run(&["charfn", s(&p)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn non_contraction_is_invalid_input() {
    let dir = TempDir::new().unwrap();
    let body = r#"{"dim": 1, "arity": 1, "blocks": [{"rows": 1, "cols": 1, "data": [[2.0, 0.0]]}]}"#;
    let p = write(&dir, "t.json", body);
    assert_eq!(run(&["check", "cnc", s(&p)]).status.code(), Some(2));
}

#[test]
fn missing_file_is_invalid_input() {
    assert_eq!(run(&["charfn", "/nonexistent/t.json"]).status.code(), Some(2));
}

#[test]
fn zero_cases_is_vacuous() {
    let out = run(&["proptest", "--suite", "all", "--cases", "0"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn proptest_reports_are_byte_identical() {
    let a = run(&["proptest", "--suite", "rowcon", "--cases", "24", "--seed", "42", "--format", "json"]);
    let b = run(&["proptest", "--suite", "rowcon", "--cases", "24", "--seed", "42", "--format", "json"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn env_seed_overrides_flag() {
    let with_env = Command::new(env!("CARGO_BIN_EXE_charfock"))
        .args(["proptest", "--suite", "equiv", "--cases", "3", "--seed", "1", "--format", "json"])
        .env("CHARFOCK_SEED", "99")
        .output()
        .unwrap();
    let direct = run(&["proptest", "--suite", "equiv", "--cases", "3", "--seed", "99", "--format", "json"]);
    assert_eq!(with_env.stdout, direct.stdout);
    let bad = Command::new(env!("CARGO_BIN_EXE_charfock"))
        .args(["proptest", "--cases", "0"])
        .env("CHARFOCK_SEED", "x")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn charfn_with_oracle_and_output_file() {
    let dir = TempDir::new().unwrap();
    let t = random_strict_row_contraction(&mut rng_from_seed(8), 2, 2, 0.3, 0.9);
    let p = write(&dir, "t.json", &to_pretty(&rowcon_to_json(&t)));
    let out_path = dir.path().join("s.json");
    let out = run(&["charfn", s(&p), "--degree", "3", "--oracle", "--format", "json", "-o", s(&out_path)]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert!(v["oracle_deviation"].as_f64().unwrap() < 1e-10);
    assert_eq!(v["series"]["coeffs"].as_array().unwrap().len(), 15);
}

#[test]
fn lifting_commands() {
    let dir = TempDir::new().unwrap();
    let e = random_minimal_lifting(&mut rng_from_seed(2), 2, 1, 1);
    let p = write(&dir, "e.json", &to_pretty(&lifting_to_json(&e)));
    assert_eq!(run(&["lift-charfn", s(&p), "--method", "both"]).status.code(), Some(0));
    assert_eq!(run(&["check", "minimal", s(&p)]).status.code(), Some(0));
    assert_eq!(run(&["check", "resolving", s(&p)]).status.code(), Some(0));
    let out = run(&["mobius", s(&p), "--re", "0.3", "--im", "-0.1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn solver_verdicts_map_to_exit_codes() {
    let dir = TempDir::new().unwrap();
    let mut rng = rng_from_seed(5);
    let a = random_strict_row_contraction(&mut rng, 2, 1, 0.3, 0.9);
    let u = random_unitary(&mut rng, 2);
    let s1 = char_symbol(&a, 4).unwrap();
    let s2 = char_symbol(&conjugate_row(&a, &u), 4).unwrap();
    let p1 = write(&dir, "s1.json", &to_pretty(&series_to_json(&s1)));
    let p2 = write(&dir, "s2.json", &to_pretty(&series_to_json(&s2)));
    assert_eq!(run(&["coincide", s(&p1), s(&p2)]).status.code(), Some(0));
    assert_eq!(run(&["equiv", s(&p1), s(&p1)]).status.code(), Some(0));

    let b = random_strict_row_contraction(&mut rng, 2, 1, 0.3, 0.9);
    let s3 = char_symbol(&b, 4).unwrap();
    let p3 = write(&dir, "s3.json", &to_pretty(&series_to_json(&s3)));
    let code = run(&["coincide", s(&p1), s(&p3)]).status.code();
    assert!(matches!(code, Some(1) | Some(3)), "{code:?}");
}
