//! End-to-end runs of the `opm` binary.

use std::path::PathBuf;
use std::process::{Command, Output};

fn scenario(name: &str) -> String {
    let mut p = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    p.push("scenarios");
    p.push(format!("{name}.json"));
    p.to_string_lossy().into_owned()
}

fn opm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = opm(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn temp_file(name: &str, contents: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("opm-cli-test-{}-{name}", std::process::id()));
    std::fs::write(&p, contents).unwrap();
    p
}

fn last_field(line: &str) -> f64 {
    line.rsplit(',').next().unwrap().parse().unwrap()
}

// ----------------------------------------------------------------------------
// Errors
// ----------------------------------------------------------------------------

#[test]
fn malformed_json_exits_with_input_code() {
    let path = temp_file("bad.json", "{\"mu1\": 0.31,");
    let out = opm(&["cost", "--policy", "so", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
}

#[test]
fn unknown_scenario_key_is_rejected() {
    let text = std::fs::read_to_string(scenario("wind")).unwrap();
    let path = temp_file("extra.json", &text.replacen('{', "{\"gamma\": 2.0,", 1));
    let out = opm(&["cost", "--policy", "so", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma"));
}

#[test]
fn out_of_range_parameter_exits_with_input_code() {
    let text = std::fs::read_to_string(scenario("wind")).unwrap();
    let path = temp_file("p.json", &text.replace("\"p\": 0.6", "\"p\": 0.0"));
    let out = opm(&["optimize", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn threshold_outside_the_cycle_exits_with_input_code() {
    let out = opm(&["cost", "--policy", "limit", "--t-tilde", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
}

// ----------------------------------------------------------------------------
// Values
// ----------------------------------------------------------------------------

#[test]
fn corrective_only_cost_on_wind() {
    let out = stdout(&["cost", "--policy", "never", "--scenario", &scenario("wind")]);
    assert_eq!(last_field(out.lines().nth(1).unwrap()), 46_500.0);
}

#[test]
fn so_only_cost_at_quarter_year_cycle() {
    let text = std::fs::read_to_string(scenario("wind")).unwrap();
    let path = temp_file("tau.json", &text.replace("\"tau\": 1.0", "\"tau\": 0.25"));
    let out = stdout(&["cost", "--policy", "so", "--scenario", path.to_str().unwrap()]);
    assert_eq!(last_field(out.lines().nth(1).unwrap()).round(), 7624.0);
}

#[test]
fn optimize_reports_json_with_the_cost() {
    let out = stdout(&["optimize", "--format", "json", "--scenario", &scenario("wind")]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!((v["cost_rate"].as_f64().unwrap() - 8468.87).abs() < 0.01);
}

#[test]
fn cheap_uso_scenario_sweeps_through_the_regimes() {
    let out = stdout(&["optimize", "--scenario", &scenario("uso_cheaper")]);
    let regime = |p: &str| {
        out.lines()
            .find(|l| l.starts_with(&format!("p,{p},")))
            .unwrap()
            .split(',')
            .nth(3)
            .unwrap()
            .to_string()
    };
    assert_eq!(regime("0.7"), "never_pm");
    assert_eq!(regime("0.78"), "uso_only");
    assert_eq!(regime("0.9"), "both");
}

#[test]
fn table_writes_to_the_out_file() {
    let mut path = std::env::temp_dir();
    path.push(format!("opm-cli-test-{}-table.csv", std::process::id()));
    let out = opm(&["table2", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 37);
    assert!(text.contains("\n1.0,2000.0,4.0,10368.0,20301.0,8469.0,"));
}

#[test]
fn corrective_only_simulation_covers_the_exact_rate() {
    let out = stdout(&[
        "simulate", "--policy", "never", "--seed", "42", "--format", "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let (rate, ci) = (v["rate"].as_f64().unwrap(), v["ci95"].as_f64().unwrap());
    assert!((rate - 46_500.0).abs() <= ci, "{rate} +- {ci}");
}

#[test]
fn wind_verification_passes() {
    let out = stdout(&["verify", "--seed", "3", "--scenario", &scenario("wind")]);
    assert!(out.lines().count() > 4);
    for line in out.lines().skip(1) {
        assert!(line.ends_with(",true"), "{line}");
    }
}

// ----------------------------------------------------------------------------
// Determinism
// ----------------------------------------------------------------------------

#[test]
fn repeated_runs_are_byte_identical() {
    let cases: Vec<Vec<String>> = vec![
        vec!["simulate", "--policy", "limit", "--t-tilde", "0.2", "--seed", "42", "--horizon", "2e4"],
        vec!["simulate", "--policy", "so", "--defer", "--seed", "42", "--horizon", "2e4"],
        vec!["table2", "--raw"],
        vec!["delta-p"],
        vec!["defer-compare", "--grid-step", "0.05"],
        vec!["optimize", "--defer", "--grid-step", "0.05"],
    ]
    .into_iter()
    .map(|v| v.into_iter().map(String::from).collect())
    .collect();
    for args in cases {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let a = opm(&args);
        let b = opm(&args);
        assert!(a.status.success(), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}
