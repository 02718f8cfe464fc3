use std::path::Path;
use std::process::{Command, Output};

fn cascade(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cascade")).args(args).output().expect("spawn cascade")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn classify_defaults_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("defaults.json");
    std::fs::write(&config, "{}").unwrap();
    let text = stdout(&cascade(&["classify", "--config", config.to_str().unwrap()]));
    let report: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(report["scenario"], "DwUB");
    assert_eq!(report["downstream_outcome"], "b_tipping");
    let again: serde_json::Value = serde_json::from_str(&serde_json::to_string(&report).unwrap()).unwrap();
    assert_eq!(report, again);
}

#[test]
fn localised_fold_curves_carry_the_cusp() {
    let text = stdout(&cascade(&["fold-curves", "--coupling", "localised", "--b", "2", "--out", "-"]));
    assert!(text.lines().any(|l| l == "2,-1.375,cusp,middle,2"), "{text}");
}

#[test]
fn subcritical_shift_has_no_events() {
    let dir = tempfile::tempdir().unwrap();
    let events = dir.path().join("events.json");
    let out = cascade(&["simulate", "--override", "lambda_plus=1", "--events", events.to_str().unwrap()]);
    assert!(!stdout(&out).is_empty());
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&events).unwrap()).unwrap();
    assert_eq!(doc["events"], serde_json::json!([]));
}

#[test]
fn exit_codes_follow_error_class() {
    assert_eq!(cascade(&["classify", "--override", "nope=1"]).status.code(), Some(2));
    assert_eq!(cascade(&["classify", "--config", "/nonexistent/run.json"]).status.code(), Some(2));
    assert_eq!(cascade(&["simulate", "--override", "solver.max_steps=10"]).status.code(), Some(3));
    let out = cascade(&["boundary", "--kind", "onset_alignment", "--bracket", "0.3,0.4"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).lines().count() == 1);
}

#[test]
fn every_subcommand_documents_its_flags() {
    let cases: [(&str, &[&str]); 8] = [
        ("simulate", &["--dt", "--events"]),
        ("classify", &[]),
        ("frozen-branches", &["--lambda-min", "--lambda-max", "--samples", "--coupled"]),
        ("fold-curves", &["--b-min", "--b-max"]),
        ("tipping-trajectory", &[]),
        ("predict-dwub", &[]),
        ("regime-map", &[]),
        ("boundary", &["--kind", "--axis", "--bracket", "--occurrence", "--tol"]),
    ];
    let common = ["--config", "--override", "--coupling", "--b", "--epsilon", "--out", "--jobs"];
    for (cmd, flags) in cases {
        let help = stdout(&cascade(&[cmd, "--help"]));
        for flag in flags.iter().chain(&common) {
            assert!(help.contains(flag), "{cmd} --help lacks {flag}");
        }
    }
    assert_eq!(cascade(&["--help"]).status.code(), Some(0));
}

#[test]
fn output_is_byte_stable() {
    let args = ["simulate", "--b", "0.55"];
    assert_eq!(stdout(&cascade(&args)), stdout(&cascade(&args)));
}

fn small_map(jobs: &str, out: &Path) -> String {
    let grid = r#"grids={"b":{"min":0.3,"max":6,"count":6},"epsilon":{"min":0.01,"max":100,"count":3}}"#;
    let out = out.join(format!("map_{jobs}.csv"));
    cascade(&["regime-map", "--override", grid, "--jobs", jobs, "--out", out.to_str().unwrap()]);
    std::fs::read_to_string(out).unwrap()
}

#[test]
fn regime_map_ignores_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let one = small_map("1", dir.path());
    assert_eq!(one.lines().count(), 19);
    assert_eq!(one, small_map("3", dir.path()));
}
