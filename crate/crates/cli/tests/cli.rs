//! End-to-end checks of the binary: output schema, determinism, exit codes.

use std::io::Write;
use std::process::{Command, Output};

const BALANCED: &str = "L=1,R=1,pi=1/2,0,1/2";

fn sojourn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sojourn"))
        .args(args)
        .output()
        .expect("binary should launch")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout should be UTF-8")
}

fn chain_file(body: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(body.as_bytes()).unwrap();
    f
}

/// A four-state chain whose partition passes both structural checks.
const GOOD_CHAIN: &str = r#"{"type":"finite",
 "P":[["1/2","1/4","1/4","0"],["1/3","1/6","1/3","1/6"],
      ["1/4","1/4","1/2","0"],["1/2","0","0","1/2"]],
 "E_circ":[0,1],"E_plus":[2],"E_minus":[3]}"#;

/// Same chain with one lower-to-upper edge, which must be rejected.
const BAD_CHAIN: &str = r#"{"type":"finite",
 "P":[["1/2","1/4","1/4","0"],["1/3","1/6","1/3","1/6"],
      ["1/4","1/4","1/2","0"],["1/2","0","1/4","1/4"]],
 "E_circ":[0,1],"E_plus":[2],"E_minus":[3]}"#;

#[test]
fn dist_emits_the_balanced_modified_table() {
    let out = sojourn(&["dist", "--lr", BALANCED, "--kind", "Ttilde", "--n", "4", "--F", "all"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("n,m,prob\n"));
    for row in ["4,0,3/8", "4,2,1/4", "4,4,3/8", "4,1,0", "4,3,0"] {
        assert!(text.lines().any(|l| l == row), "missing row {row} in:\n{text}");
    }
}

#[test]
fn dist_horizon_zero_is_the_target_indicator() {
    let out = sojourn(&["dist", "--lr", BALANCED, "--n", "0", "--F", "0"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "n,m,prob\n0,0,1\n");
    let out = sojourn(&["dist", "--lr", BALANCED, "--n", "0", "--F", "5"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "n,m,prob\n0,0,0\n");
}

#[test]
fn dist_method_both_agrees_exactly_on_rationals() {
    let f = chain_file(GOOD_CHAIN);
    let path = f.path().to_str().unwrap();
    for kind in ["T", "Ttilde"] {
        let out = sojourn(&[
            "dist", "--chain", path, "--kind", kind, "--n", "6", "--start", "1", "--method",
            "both",
        ]);
        assert!(out.status.success(), "kind {kind}: {}", stdout(&out));
        let text = stdout(&out);
        assert!(text.starts_with("n,m,prob,prob_oracle,abs_diff\n"));
        for line in text.lines().skip(1) {
            assert!(line.ends_with(",0"), "nonzero diff row: {line}");
        }
    }
}

#[test]
fn dist_output_is_byte_stable_and_file_matches_stdout() {
    let args = ["dist", "--lr", "L=1,R=2,pi=1/3,1/3,0,1/3", "--kind", "Ttilde", "--n", "7"];
    let a = sojourn(&args);
    let b = sojourn(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("table.csv");
    let mut with_output: Vec<&str> = args.to_vec();
    let file_str = file.to_str().unwrap().to_owned();
    with_output.extend_from_slice(&["--output", &file_str]);
    let c = sojourn(&with_output);
    assert!(c.status.success());
    assert_eq!(std::fs::read(&file).unwrap(), a.stdout);
}

#[test]
fn simulate_is_deterministic_under_a_seed() {
    let args = [
        "simulate", "--lr", BALANCED, "--kind", "Ttilde", "--n", "6", "--paths", "5000",
        "--seed", "42", "--chi-square",
    ];
    let a = sojourn(&args);
    let b = sojourn(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.contains("# chi_square stat="));

    let mut reseeded: Vec<&str> = args[..args.len() - 3].to_vec();
    reseeded.extend_from_slice(&["--seed", "43", "--chi-square"]);
    let c = sojourn(&reseeded);
    assert!(c.status.success());
    assert_ne!(a.stdout, c.stdout, "different seeds should move the empirical table");
}

#[test]
fn eval_certify_reports_the_tail_bound() {
    let out = sojourn(&[
        "eval", "--lr", "L=1,R=1,pi=1/4,1/2,1/4", "--x", "0.4", "--y", "0.3", "--certify", "40",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("start,kind,value,partial,abs_diff,bound,certified\n"));
    for line in text.lines().skip(1) {
        assert!(line.ends_with(",yes"), "uncertified row: {line}");
    }
}

#[test]
fn roots_lists_the_quadratic_pair() {
    let out = sojourn(&["roots", "--lr", BALANCED, "--x", "0.5"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("re,im,modulus,class,residual\n"));
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].contains("inside") && rows[0].starts_with("2.679491924311227"));
    assert!(rows[1].contains("outside") && rows[1].starts_with("3.732050807568877"));
}

#[test]
fn assumption_violations_exit_with_code_two() {
    let f = chain_file(BAD_CHAIN);
    let out = sojourn(&["dist", "--chain", f.path().to_str().unwrap(), "--n", "3"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("lower-to-upper edge 3->2"), "stderr: {err}");
}

#[test]
fn failed_certification_exits_with_code_three() {
    // the printed closed display for the modified kernel is known to drift
    let out = sojourn(&[
        "eval", "--lr", "L=1,R=1,pi=1/4,1/2,1/4", "--x", "0.5", "--y", "0.5", "--formula",
        "paper-closed", "--certify", "30",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let text = stdout(&out);
    assert!(text.lines().any(|l| l.ends_with(",no")), "expected an uncertified row:\n{text}");
}

#[test]
fn usage_errors_exit_with_code_sixty_four() {
    let cases: Vec<Vec<&str>> = vec![
        vec!["dist", "--n", "3"],
        vec!["dist", "--lr", BALANCED, "--chain", "/nonexistent.json", "--n", "3"],
        vec!["dist", "--lr", BALANCED, "--n", "3", "--kind", "bogus"],
        vec!["dist", "--lr", BALANCED, "--n", "3", "--F", "0,x"],
        vec!["simulate", "--lr", BALANCED, "--n", "3", "--paths", "0"],
        vec!["eval", "--lr", BALANCED, "--x", "1.5", "--y", "0.5"],
        vec!["roots", "--lr", "L=1,R=1,pi=1/2,1/2", "--x", "0.5"],
    ];
    for args in cases {
        let out = sojourn(&args);
        assert_eq!(out.status.code(), Some(64), "args: {args:?}");
    }
}

#[test]
fn help_exits_cleanly() {
    let out = sojourn(&["--help"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("Exit codes"));
    let out = sojourn(&["dist", "--help"]);
    assert!(out.status.success());
}

#[test]
fn tampered_oracle_makes_verify_fail() {
    let out = sojourn(&["verify", "--suite", "quick", "--tamper-oracle"]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("FAIL"));
    assert!(text.contains("FAILED:"));
}
