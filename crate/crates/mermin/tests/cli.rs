//! End-to-end tests of the `mermin` binary: output schemas against golden
//! files (numeric fields compared at 1e-9, not textually), exit codes, CSV
//! sweeps, and the reproduction targets.

use std::path::Path;
use std::process::{Command, Output};

fn mermin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mermin"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr_str(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

/// Structural JSON comparison: identical keys and types, numbers within
/// 1e-9 absolute or relative.
fn assert_json_close(actual: &serde_json::Value, expected: &serde_json::Value, path: &str) {
    use serde_json::Value;
    match (actual, expected) {
        (Value::Number(a), Value::Number(b)) => {
            let (a, b) = (a.as_f64().unwrap(), b.as_f64().unwrap());
            let diff = (a - b).abs();
            assert!(diff <= 1e-9 || diff <= 1e-9 * b.abs(), "{path}: {a} vs {b}");
        }
        (Value::Array(a), Value::Array(b)) => {
            assert_eq!(a.len(), b.len(), "{path}: array lengths differ");
            for (i, (x, y)) in a.iter().zip(b.iter()).enumerate() {
                assert_json_close(x, y, &format!("{path}[{i}]"));
            }
        }
        (Value::Object(a), Value::Object(b)) => {
            let mut a_keys: Vec<_> = a.keys().collect();
            let mut b_keys: Vec<_> = b.keys().collect();
            a_keys.sort();
            b_keys.sort();
            assert_eq!(a_keys, b_keys, "{path}: key sets differ");
            for (key, value) in a {
                assert_json_close(value, &b[key], &format!("{path}.{key}"));
            }
        }
        (a, b) => assert_eq!(a, b, "{path}: values differ"),
    }
}

fn golden(name: &str) -> serde_json::Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    let text = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("cannot read golden file {}: {e}", path.display()));
    serde_json::from_str(&text).expect("golden file is JSON")
}

#[test]
fn analyze_ghz_symmetric_matches_golden() {
    let out = mermin(&[
        "analyze",
        "--state",
        "ghz-symmetric:l=0.3,theta=0.4",
        "--oracle",
        "--seed",
        "7",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    let actual: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_json_close(&actual, &golden("analyze_ghz_symmetric.json"), "$");
    // Spot-check the headline numbers directly.
    assert!((actual["bound"]["bound"].as_f64().unwrap() - 2.4).abs() <= 1e-12);
    assert_eq!(actual["bound"]["tightness"], "certified_tight");
}

#[test]
fn analyze_maximally_mixed_matches_golden() {
    let out = mermin(&["analyze", "--state", "mixed:n=3"]);
    assert!(out.status.success());
    let actual: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_json_close(&actual, &golden("analyze_mixed.json"), "$");
    assert_eq!(actual["bound"]["bound"].as_f64().unwrap(), 0.0);
}

#[test]
fn analyze_noisy_w_certifies_not_tight() {
    let out = mermin(&["analyze", "--state", "noisy-w:p=1", "--oracle"]);
    assert!(out.status.success());
    let actual: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    let bound = actual["bound"]["bound"].as_f64().unwrap();
    assert!((bound - 2.0 * 34.0f64.sqrt() / 3.0).abs() <= 1e-10);
    assert_eq!(actual["bound"]["tightness"], "certified_not_tight");
    // W is not an X-state, so no concurrence and no relations.
    assert!(actual["concurrence"].is_null());
    assert_eq!(actual["relations"].as_array().unwrap().len(), 0);
}

#[test]
fn analyze_csv_format_is_flat() {
    let out = mermin(&[
        "analyze",
        "--state",
        "noisy-ghz-tilde:p=0.75",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let text = stdout_str(&out);
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("state,n,lambdaMax,bound,"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "noisy-ghz-tilde:p=0.75");
    let bound: f64 = row[3].parse().unwrap();
    assert!((bound - 3.0).abs() <= 1e-12);
}

#[test]
fn analyze_accepts_state_files() {
    let rho = mermin_lib_state();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.json");
    std::fs::write(&path, rho).unwrap();
    let out = mermin(&["analyze", "--file", path.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    let actual: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert!((actual["bound"]["bound"].as_f64().unwrap() - 3.2).abs() <= 1e-12);
}

/// noisy-ghz at p = 0.8 written through the library's own serializer.
fn mermin_lib_state() -> String {
    use mermin::qstate::{make_family, NoisyStateParams, StateFamily};
    make_family(&StateFamily::NoisyGhz(NoisyStateParams::new(0.8).unwrap()))
        .unwrap()
        .to_json_string()
}

#[test]
fn exit_codes() {
    // Invalid family parameter names the violated constraint (exit 2).
    let out = mermin(&["analyze", "--state", "ghz-symmetric:l=0.9,theta=0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr_str(&out).contains("1/8 + (sqrt(3)/2)*theta"),
        "constraint not named: {}",
        stderr_str(&out)
    );

    // Unknown family (exit 2).
    let out = mermin(&["analyze", "--state", "bogus:p=1"]);
    assert_eq!(out.status.code(), Some(2));

    // Unreadable file (exit 3).
    let out = mermin(&["analyze", "--file", "/nonexistent/state.json"]);
    assert_eq!(out.status.code(), Some(3));

    // Malformed file contents (exit 3).
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{not json").unwrap();
    let out = mermin(&["analyze", "--file", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));

    // Unknown sweep parameter (exit 2).
    let out = mermin(&[
        "sweep", "--family", "noisy-w", "--param", "q", "--from", "0", "--to", "1", "--points", "3",
    ]);
    assert_eq!(out.status.code(), Some(2));

    // Unknown CLI flag is a usage error (exit 2, from clap).
    let out = mermin(&["analyze", "--bogus-flag"]);
    assert_eq!(out.status.code(), Some(2));

    // Help exits 0.
    let out = mermin(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn sweep_noisy_ghz_tilde_bound_is_4p() {
    let out = mermin(&[
        "sweep",
        "--family",
        "noisy-ghz-tilde",
        "--param",
        "p",
        "--from",
        "0",
        "--to",
        "1",
        "--points",
        "101",
    ]);
    assert!(out.status.success());
    let text = stdout_str(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "param,lambdaMax,bound,cm,oracleValue,violatesClassical"
    );
    let mut rows = 0;
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        let p: f64 = fields[0].parse().unwrap();
        let bound: f64 = fields[2].parse().unwrap();
        assert!(
            (bound - 4.0 * p).abs() <= 1e-12,
            "bound {} is not 4p at p = {p}",
            bound
        );
        let violates: bool = fields[5].parse().unwrap();
        assert_eq!(violates, p > 0.5, "violation verdict at p = {p}");
        rows += 1;
    }
    assert_eq!(rows, 101);
}

#[test]
fn sweep_generalized_ghz4_closed_form() {
    let out = mermin(&[
        "sweep",
        "--family",
        "generalized-ghz4",
        "--param",
        "phi",
        "--from",
        "0",
        "--to",
        "1.5707963267948966",
        "--points",
        "65",
    ]);
    assert!(out.status.success());
    let text = stdout_str(&out);
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let phi: f64 = fields[0].parse().unwrap();
        let bound: f64 = fields[2].parse().unwrap();
        let closed = 2.0 * std::f64::consts::SQRT_2 * 1.0f64.max(2.0 * (2.0 * phi).sin());
        assert!(
            (bound - closed).abs() <= 1e-10,
            "closed form mismatch at phi = {phi}"
        );
        // Four-qubit states are not three-qubit X-states: cm column empty.
        assert!(fields[3].is_empty());
    }
}

#[test]
fn sweep_zero_width_single_row() {
    let out = mermin(&[
        "sweep",
        "--family",
        "noisy-ghz",
        "--param",
        "p",
        "--from",
        "0.5",
        "--to",
        "0.5",
        "--points",
        "1",
    ]);
    assert!(out.status.success());
    let text = stdout_str(&out);
    assert_eq!(text.lines().count(), 2, "header plus exactly one row");
}

#[test]
fn sweep_ghz_symmetric_with_fixed_theta() {
    let out = mermin(&[
        "sweep",
        "--family",
        "ghz-symmetric",
        "--param",
        "l",
        "--from",
        "-0.3",
        "--to",
        "0.3",
        "--points",
        "7",
        "--fix",
        "theta=0.4",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    let text = stdout_str(&out);
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let l: f64 = fields[0].parse().unwrap();
        let bound: f64 = fields[2].parse().unwrap();
        assert!((bound - 8.0 * l.abs()).abs() <= 1e-12);
    }
}

#[test]
fn reproduce_targets_run_clean() {
    let start = std::time::Instant::now();
    for target in ["example1", "example2", "example3", "figure1", "mabk4"] {
        let out = mermin(&["reproduce", target]);
        assert!(
            out.status.success(),
            "{target} failed: {}",
            stderr_str(&out)
        );
        assert!(!stdout_str(&out).is_empty());
    }
    assert!(
        start.elapsed().as_secs() < 60,
        "reproduction targets exceeded the runtime budget"
    );
}

#[test]
fn reproduce_example1_boundary_value() {
    // At |l| = 1/4 the bound sits exactly on the classical value 2.
    let out = mermin(&["reproduce", "example1", "--ell", "0.25", "--theta", "0.3"]);
    assert!(out.status.success());
    let text = stdout_str(&out);
    assert!(
        text.contains("analytic bound Q = 2.000000000000"),
        "boundary bound not 2: {text}"
    );
    assert!(text.contains("violates MI: false"));
}

#[test]
fn reproduce_figure1_mi_threshold_is_half() {
    let out = mermin(&["reproduce", "figure1"]);
    assert!(out.status.success());
    let text = stdout_str(&out);
    let mi_row = text
        .lines()
        .find(|l| l.contains("Mermin"))
        .expect("Mermin row present");
    assert!(mi_row.contains("0.500000000"), "MI row: {mi_row}");
    assert!(mi_row.contains("computed"));
    assert!(text.contains("quoted"), "quoted provenance labels present");
}

#[test]
fn reproduce_mabk4_maximum() {
    let out = mermin(&["reproduce", "mabk4"]);
    assert!(out.status.success());
    let text = stdout_str(&out);
    assert!(
        text.contains("5.656854249"),
        "four-qubit maximum 4 sqrt(2) missing: {text}"
    );
}

#[test]
fn oracle_outputs_result_json() {
    let out = mermin(&[
        "oracle",
        "--state",
        "ghz:n=3",
        "--restarts",
        "8",
        "--seed",
        "5",
    ]);
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert!((value["bestValue"].as_f64().unwrap() - 4.0).abs() <= 1e-9);
    assert_eq!(value["restartValues"].as_array().unwrap().len(), 8);
    assert_eq!(value["settings"].as_array().unwrap().len(), 3);
}

#[test]
fn oracle_with_grid_refinement() {
    let out = mermin(&[
        "oracle",
        "--state",
        "ghz:n=3",
        "--restarts",
        "4",
        "--seed",
        "5",
        "--refine-radius",
        "0.05",
        "--refine-steps",
        "6",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    let value: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert!((value["bestValue"].as_f64().unwrap() - 4.0).abs() <= 1e-9);
}

#[test]
fn seed_env_var_matches_flag() {
    let flagged = mermin(&["analyze", "--state", "ghz:n=3", "--oracle", "--seed", "42"]);
    let env = Command::new(env!("CARGO_BIN_EXE_mermin"))
        .args(["analyze", "--state", "ghz:n=3", "--oracle"])
        .env("MERMIN_SEED", "42")
        .output()
        .expect("binary runs");
    assert!(flagged.status.success() && env.status.success());
    assert_eq!(flagged.stdout, env.stdout, "MERMIN_SEED must act as --seed");
}

#[test]
fn split_flag_changes_reshape() {
    // For a 4-party state, split 1 gives a 3x27 reshape whose spectrum can
    // differ from the default 9x9; the command must still succeed.
    let out = mermin(&[
        "analyze",
        "--state",
        "generalized-ghz4:phi=0.5",
        "--split",
        "1",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    let out_bad = mermin(&[
        "analyze",
        "--state",
        "generalized-ghz4:phi=0.5",
        "--split",
        "4",
    ]);
    assert_eq!(out_bad.status.code(), Some(2));
}
