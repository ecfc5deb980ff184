//! End-to-end runs of the `qba` binary: subcommands, outputs and exit codes.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn qba(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qba"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_config(dir: &TempDir, name: &str, json: serde_json::Value) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, json.to_string()).unwrap();
    path.to_str().unwrap().to_owned()
}

fn small_scenario() -> serde_json::Value {
    serde_json::json!({
        "n": 4, "m": 1, "w": 4, "commander_order": 2, "seed": 7, "runs": 5,
        "list_length": 400, "min_support": 20, "decoy_count": 0,
    })
}

#[test]
fn agree_reports_in_json() {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, "s.json", small_scenario());
    let out = qba(&["agree", "--config", &config, "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(report.is_object());
}

#[test]
fn agree_is_deterministic_and_traces_replay() {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, "s.json", small_scenario());
    let trace = dir.path().join("t.jsonl");
    let trace = trace.to_str().unwrap();
    let args = [
        "agree", "--config", &config, "--corrupt", "1", "--strategy", "forging", "--format", "json",
    ];
    let first = qba(&args);
    let second = qba(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(stdout(&first), stdout(&second));

    let mut with_trace = args.to_vec();
    with_trace.extend(["--trace-out", trace]);
    assert_eq!(qba(&with_trace).status.code(), Some(0));
    assert!(Path::new(trace).metadata().unwrap().len() > 0);

    let replayed = qba(&["replay", trace]);
    assert_eq!(replayed.status.code(), Some(0));
    let lines = stdout(&replayed);
    assert_eq!(lines.lines().count(), 5);
    assert!(lines.lines().all(|l| l.ends_with("identical")), "{lines}");
}

#[test]
fn commander_strategies_are_accepted_by_name() {
    let dir = TempDir::new().unwrap();
    let mut scenario = small_scenario();
    scenario["corrupt"] = serde_json::json!([0]);
    scenario["commander_strategy"] = "selective-send".into();
    let config = write_config(&dir, "s.json", scenario);
    let out = qba(&["agree", "--config", &config]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn distribute_prints_counts() {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, "s.json", small_scenario());
    let out = qba(&["distribute", "--config", &config]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("list length         400"), "{text}");
    assert!(text.contains("aborted             false"), "{text}");
}

#[test]
fn tampered_distribution_exits_with_three() {
    let dir = TempDir::new().unwrap();
    let mut scenario = small_scenario();
    scenario["runs"] = 1.into();
    scenario["decoy_count"] = 200.into();
    scenario["channel_adversary"] = "intercept-resend-random-basis".into();
    let config = write_config(&dir, "s.json", scenario);
    assert_eq!(qba(&["distribute", "--config", &config]).status.code(), Some(3));
    assert_eq!(qba(&["agree", "--config", &config]).status.code(), Some(3));
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let mut scenario = small_scenario();
    scenario["w"] = 2.into();
    let bad = write_config(&dir, "bad.json", scenario);
    let out = qba(&["agree", "--config", &bad]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());

    let good = write_config(&dir, "good.json", small_scenario());
    assert_eq!(qba(&["agree", "--config", &good, "--strategy", "nope"]).status.code(), Some(1));
    assert_eq!(qba(&["agree", "--config", "/nonexistent/s.json"]).status.code(), Some(1));
}

#[test]
fn calibrate_matches_known_values() {
    let out = qba(&["calibrate", "--n", "4", "--w", "4", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let c: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(c["min_support"], 100);
    assert_eq!(c["list_length"], 1320);
}

#[test]
fn forgery_oracle_prints_a_probability() {
    let out = qba(&[
        "oracle", "forgery", "--n", "3", "--w", "3", "--list-length", "2", "--support-size", "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let p: f64 = stdout(&out).trim().parse().unwrap();
    assert!(p > 0.0 && p < 1.0, "{p}");
}

#[test]
fn measurement_oracle_sums_to_one() {
    let out = qba(&["oracle", "measurement", "--d", "3", "--offsets", "1,2"]);
    assert_eq!(out.status.code(), Some(0));
    let total: f64 = stdout(&out)
        .lines()
        .map(|l| l.split('\t').nth(1).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-12);
}
