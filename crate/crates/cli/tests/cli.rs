//! End-to-end checks of the binary: exit codes, output schema, the CSV/JSON
//! round trip, and the reproducibility contract.

use std::path::Path;
use std::process::{Command, Output};

fn mgof(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mgof"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

const POWER_CONFIG: &str = r#"{
  "id": "power-test",
  "statistics": [{"type":"chi2"},{"type":"loglik"}],
  "n_grid": [60, 120],
  "growth": {"c": 1.0, "q": 1.0},
  "alternative": {"profile": "two-block", "amplitude": {"kind": "rate", "c": 0.5, "gamma": 0.4}},
  "alpha": 0.1,
  "reps": 2000,
  "seed": 99
}"#;

#[test]
fn moments_csv_and_json_agree() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "moments.json",
        r#"{
          "id": "moments-test",
          "statistics": [{"type":"chi2"},{"type":"pds","d":2.0},{"type":"indicator","r":0}],
          "lambdas": [0.1, 2.0, 50.0]
        }"#,
    );
    let out = mgof(&["moments", "--config", "moments.json", "--out", "res"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let csv = std::fs::read_to_string(tmp.path().join("res/moments-test.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "statistic,lambda,mean,var,r_n,sigma2,rho,rho_expansion,residual"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 9);

    // Every CSV cell must be reproducible from the JSON summary.
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("res/moments-test.json")).unwrap())
            .unwrap();
    let jrows = json["rows"].as_array().unwrap();
    assert_eq!(jrows.len(), rows.len());
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    for (csv_row, jrow) in rows.iter().zip(jrows) {
        for (col, cell) in header.iter().zip(csv_row.split(',')) {
            let v = &jrow[*col];
            let expected = match v {
                serde_json::Value::Null => String::new(),
                serde_json::Value::String(s) => s.replace(',', ";"),
                serde_json::Value::Number(n) if n.is_i64() => n.to_string(),
                serde_json::Value::Number(n) => format!("{:.14e}", n.as_f64().unwrap()),
                other => panic!("unexpected value {other:?}"),
            };
            assert_eq!(cell, expected, "column {col}");
        }
    }
    // config echo is embedded
    assert_eq!(json["config"]["id"], "moments-test");
    assert_eq!(json["command"], "moments");
    assert!(json["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn reruns_and_thread_counts_reproduce_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "power.json", POWER_CONFIG);
    for (dir, threads) in [("a", "1"), ("b", "1"), ("c", "2")] {
        let out = mgof(
            &[
                "power", "--config", "power.json", "--out", dir, "--threads", threads,
            ],
            tmp.path(),
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(tmp.path().join("a/power-test.csv")).unwrap();
    let b = std::fs::read(tmp.path().join("b/power-test.csv")).unwrap();
    let c = std::fs::read(tmp.path().join("c/power-test.csv")).unwrap();
    assert_eq!(a, b, "identical reruns must emit identical tables");
    assert_eq!(a, c, "thread count must not affect results");
}

#[test]
fn seed_override_changes_results() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "power.json", POWER_CONFIG);
    let base = mgof(&["power", "--config", "power.json", "--out", "x"], tmp.path());
    assert!(base.status.success());
    let other = mgof(
        &["power", "--config", "power.json", "--out", "y", "--seed", "1234"],
        tmp.path(),
    );
    assert!(other.status.success());
    let x = std::fs::read(tmp.path().join("x/power-test.csv")).unwrap();
    let y = std::fs::read(tmp.path().join("y/power-test.csv")).unwrap();
    assert_ne!(x, y);
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    // reps below the floor
    write(
        tmp.path(),
        "bad-reps.json",
        &POWER_CONFIG.replace("\"reps\": 2000", "\"reps\": 50"),
    );
    let out = mgof(&["power", "--config", "bad-reps.json"], tmp.path());
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));

    // malformed JSON
    write(tmp.path(), "broken.json", "{ this is not json");
    let out = mgof(&["moments", "--config", "broken.json"], tmp.path());
    assert_eq!(out.status.code(), Some(2));

    // missing config entirely
    let out = mgof(&["moments"], tmp.path());
    assert_eq!(out.status.code(), Some(2));

    // descending n grid
    write(
        tmp.path(),
        "bad-grid.json",
        &POWER_CONFIG.replace("[60, 120]", "[120, 60]"),
    );
    let out = mgof(&["power", "--config", "bad-grid.json"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_runs_selected_criteria() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "verify.json",
        r#"{
          "id": "verify-fast",
          "criteria": ["rho-maximality", "closed-form-efficiency", "verdict-table"]
        }"#,
    );
    let out = mgof(&["verify", "--config", "verify.json", "--out", "res"], tmp.path());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "stdout: {stdout}");
    assert_eq!(stdout.matches("PASS").count(), 3, "{stdout}");

    let csv = std::fs::read_to_string(tmp.path().join("res/verify-fast.csv")).unwrap();
    assert!(csv.starts_with("criterion,pass,seconds,detail"));
    assert_eq!(csv.lines().count(), 4);

    // unknown criterion id is a config error
    write(
        tmp.path(),
        "verify-bad.json",
        r#"{ "id": "verify-bad", "criteria": ["no-such-criterion"] }"#,
    );
    let out = mgof(&["verify", "--config", "verify-bad.json"], tmp.path());
    assert_eq!(out.status.code(), Some(2));

    // reducing reps below the pinned counts is a config error
    write(
        tmp.path(),
        "verify-low.json",
        r#"{ "id": "verify-low", "criteria": ["rho-maximality"], "reps": 1000 }"#,
    );
    let out = mgof(&["verify", "--config", "verify-low.json"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn iare_emits_verdict_and_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "iare.json",
        r#"{
          "id": "iare-test",
          "h": {"type":"chi2"}, "psi": {"type":"loglik"},
          "growth": {"c":1.0,"q":1.0},
          "tau": {"kind":"constant","value":0.5},
          "alternative": {"profile":"two-block","amplitude":{"kind":"rate","c":0.5,"gamma":0.4}},
          "n_grid": [64],
          "seed": 4
        }"#,
    );
    let out = mgof(&["iare", "--config", "iare.json", "--out", "res"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("res/iare-test.csv")).unwrap();
    assert!(csv.starts_with("n,e_closed_form,k_n,k_n_over_n,verdict,note"));
    let row = csv.lines().nth(1).unwrap();
    assert!(row.contains("e>1"), "{row}");
    // no MC block: the k_n columns stay empty
    assert!(row.split(',').nth(2).unwrap().is_empty());

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("res/iare-test.json")).unwrap())
            .unwrap();
    assert_eq!(json["verdict_detail"]["verdict"], "e>1");
    assert!(json["verdict_detail"]["conditions"].is_array());
}

#[test]
fn moments_residuals_track_the_expansions() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "m.json",
        r#"{
          "id": "m",
          "statistics": [{"type":"loglik"},{"type":"indicator","r":1}],
          "lambdas": [0.04, 100.0]
        }"#,
    );
    let out = mgof(&["moments", "--config", "m.json", "--out", "res"], tmp.path());
    assert!(out.status.success());
    let csv = std::fs::read_to_string(tmp.path().join("res/m.csv")).unwrap();
    let residual = |stat: &str, lambda: &str| -> Option<f64> {
        csv.lines().skip(1).find_map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0] == stat && f[1].starts_with(lambda)).then(|| f[8].parse().ok()).flatten()
        })
    };
    // large-occupancy expansion for the log-likelihood member
    assert!(residual("loglik", "1.0000000000").unwrap() <= 5e-4);
    // small-occupancy expansion for the singleton count
    assert!(residual("indicator(1)", "4.0000000000").unwrap() <= 5e-3);
}
