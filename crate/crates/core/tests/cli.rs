//! End-to-end tests of the `wco` binary: exit codes, reports and flags.

use std::io::Write;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::NamedTempFile;

const COLLAPSE: &str = r#"{
  "name": "collapse",
  "atoms": ["a", "b"],
  "mass": {"a": 1, "b": 2},
  "phi": {"a": "a", "b": "a"},
  "w": {"a": [1, 0], "b": [2, 0]}
}"#;

const MULTIPLICATION: &str = r#"{
  "name": "multiplication",
  "atoms": ["a", "b"],
  "mass": {"a": 1, "b": 1},
  "phi": {"a": "a", "b": "b"},
  "w": {"a": [2, 0], "b": [0, 3]}
}"#;

fn with_family(base: &str, family: &str) -> String {
    let mut v: Value = serde_json::from_str(base).unwrap();
    v["family"] = serde_json::from_str(family).unwrap();
    v.to_string()
}

fn file(text: &str) -> NamedTempFile {
    let mut f = NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

fn wco(args: &[&str], scenario: Option<&str>) -> Output {
    let f = scenario.map(file);
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_wco"));
    cmd.args(args).env_remove("WCO_TOL");
    if let Some(f) = &f {
        cmd.arg("--scenario").arg(f.path());
    }
    cmd.output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

#[test]
fn analyze_prints_h() {
    let out = wco(&["analyze", "--format", "text"], Some(COLLAPSE));
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("atoms") && text.contains("h_6"), "{text}");
    let out = wco(&["analyze"], Some(COLLAPSE));
    let v = json(&out);
    assert_eq!(v["analysis"]["h"]["a"], 9.0);
    assert_eq!(v["analysis"]["h"]["b"], 0.0);
    assert_eq!(v["analysis"]["kernel"][0], "b");
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn certify_multiplication_is_normal() {
    let out = wco(&["certify"], Some(MULTIPLICATION));
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["certificate"]["normal"], true);
    assert_eq!(v["family"]["a"][0]["t"], 4.0);
    assert_eq!(v["family"]["b"][0]["t"], 9.0);
}

#[test]
fn certify_collapse_exits_one() {
    let out = wco(&["certify"], Some(COLLAPSE));
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["status"], "negative");
    assert!(v["certificate"]["reason"].as_str().unwrap().starts_with("h(b) = 0 while w(b) != 0"));
}

#[test]
fn classify_collapse() {
    let out = wco(&["classify"], Some(COLLAPSE));
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let c = &v["classification"];
    assert_eq!(c["hyponormal"]["holds"], false);
    assert_eq!(c["quasinormal"]["holds"], false);
    assert_eq!(c["injectivity"]["agree"], true);
    assert_eq!(c["injectivity"]["witness"]["atom"], "b");
}

#[test]
fn check_cc_on_the_collapse() {
    // delta_9 at both atoms satisfies CC; the equivalence battery is all false.
    let s = with_family(COLLAPSE, r#"{"a": [{"t": 9, "p": 1}], "b": [{"t": 9, "p": 1}]}"#);
    let out = wco(&["check-cc"], Some(&s));
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["cc"]["satisfied"], true);
    assert_eq!(v["cc1"]["satisfied"], false);
    assert_eq!(v["main1_battery"]["agree"], true);
    assert_eq!(v["main1_battery"]["h_positive"], false);

    let s = with_family(COLLAPSE, r#"{"a": [{"t": 9, "p": 1}], "b": [{"t": 0, "p": 1}]}"#);
    let out = wco(&["check-cc"], Some(&s));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn extend_reports_absolute_continuity_failure() {
    let s = with_family(COLLAPSE, r#"{"a": [{"t": 9, "p": 1}], "b": [{"t": 0, "p": 1}]}"#);
    let out = wco(&["extend"], Some(&s));
    assert_eq!(out.status.code(), Some(1));
    assert!(json(&out)["summary"].as_str().unwrap().contains("absolute continuity"));

    let s = with_family(MULTIPLICATION, r#"{"a": [{"t": 4, "p": 1}], "b": [{"t": 9, "p": 1}]}"#);
    let out = wco(&["extend", "--format", "text"], Some(&s));
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("a@4"));
}

#[test]
fn solve_cc_modes() {
    let out = wco(&["solve-cc", "--grid", "0,9"], Some(COLLAPSE));
    assert_eq!(out.status.code(), Some(1));
    let out = wco(&["solve-cc", "--grid", "0,9", "--mode", "plain-cc"], Some(COLLAPSE));
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["family"]["b"][0]["t"], 9.0);
    let out = wco(&["solve-cc", "--grid", "1,-2"], Some(COLLAPSE));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn input_errors_exit_two() {
    let bad_mass = COLLAPSE.replace(r#""a": 1, "b": 2"#, r#""a": 0, "b": 2"#);
    let out = wco(&["analyze"], Some(&bad_mass));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mass.a"));

    let out = wco(&["check-cc"], Some(COLLAPSE));
    assert_eq!(out.status.code(), Some(2));

    let out = wco(&["frobnicate"], None);
    assert_eq!(out.status.code(), Some(2));

    let out = wco(&["analyze"], None);
    assert_eq!(out.status.code(), Some(2));

    let out = wco(&["analyze"], Some("{not json"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tolerance_from_env_and_flag() {
    let f = file(COLLAPSE);
    let run = |extra: &[&str]| {
        let out = Command::new(env!("CARGO_BIN_EXE_wco"))
            .arg("classify")
            .arg("--scenario")
            .arg(f.path())
            .args(extra)
            .env("WCO_TOL", "1e-6")
            .output()
            .unwrap();
        json(&out)["tolerances"]["abs"].as_f64().unwrap()
    };
    assert_eq!(run(&[]), 1e-6);
    assert_eq!(run(&["--tol", "1e-4"]), 1e-4);
}

#[test]
fn generate_round_trips() {
    let a = wco(&["generate", "--kind", "quasinormal", "--size", "6", "--seed", "3"], None);
    let b = wco(&["generate", "--kind", "quasinormal", "--size", "6", "--seed", "3"], None);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let out = wco(&["classify"], Some(&text));
    assert_eq!(json(&out)["classification"]["quasinormal"]["holds"], true);
    let out = wco(&["certify"], Some(&text));
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn selftest_small_run() {
    let out = wco(&["selftest", "--count", "30", "--seed", "5"], None);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["selftest"]["instances"].as_u64().unwrap() >= 30);
}
