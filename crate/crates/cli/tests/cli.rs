use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gecone"))
}

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/problems").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn write_tmp(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn analyze_example_is_certified() {
    let out = run(&["analyze", corpus("example_6_4.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["calmness"]["status"], "certified");
    assert_eq!(r["calmness"]["necessary"], true);
    assert_eq!(r["multiplier"]["lambda"], serde_json::json!([1.0, 0.0, -1.0]));
    assert!(r.get("timingsMs").is_none());
}

#[test]
fn analyze_is_byte_identical_across_runs() {
    let f = corpus("example_6_4.json");
    let a = run(&["analyze", f.to_str().unwrap(), "--seed", "5"]);
    let b = run(&["analyze", f.to_str().unwrap(), "--seed", "5"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn flags_override_file_options() {
    let f = corpus("orthant_nlp.json");
    let out = run(&["analyze", f.to_str().unwrap(), "--radii", "0.1,0.01", "--face-cap", "64", "--tol-kkt", "1e-11"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["settings"]["radii"], serde_json::json!([0.1, 0.01]));
    assert_eq!(r["settings"]["faceCap"], 64);
    assert_eq!(r["probe"]["rows"].as_array().unwrap().len(), 2);
    let out = run(&["analyze", f.to_str().unwrap(), "--tol-kkt", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn timings_are_opt_in() {
    let out = run(&["analyze", corpus("soc_vertex.json").to_str().unwrap(), "--timings"]);
    assert!(json(&out)["timingsMs"].is_object());
}

#[test]
fn text_format_renders_the_same_report() {
    let out = run(&["analyze", corpus("example_6_4.json").to_str().unwrap(), "--format", "text"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("status: certified"));
    assert!(text.contains("lambda: [1.0, 0.0, -1.0]"));
}

#[test]
fn malformed_json_exits_2_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(corpus("orthant_nlp.json")).unwrap().replace("\"xbar\": [1, -1]", "\"xbar\": [1, \"a\"]");
    let out = run(&["analyze", &write_tmp(&dir, "bad.json", &text)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("reference.xbar[1]"));
    let out = run(&["analyze", &write_tmp(&dir, "trunc.json", "{\"dims\": ")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn infeasible_reference_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(corpus("orthant_nlp.json")).unwrap().replace("\"ybar\": [1, 0]", "\"ybar\": [-1, 0]");
    let out = run(&["analyze", &write_tmp(&dir, "infeasible.json", &text)]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn degenerate_constraint_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{
        "dims": {"n": 1, "m": 1, "l": 2},
        "cone": {"type": "orthant", "dim": 2},
        "g": [[], []],
        "f": [[{"coeff": 1, "exponents": [0, 1]}]],
        "reference": {"xbar": [0], "ybar": [0]}
    }"#;
    let out = run(&["analyze", &write_tmp(&dir, "degenerate.json", text)]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nondegeneracy"));
}

#[test]
fn gderiv_at_zero_is_trivial_and_scales() {
    let f = corpus("example_6_4.json");
    let r = json(&run(&["gderiv", f.to_str().unwrap()]));
    assert_eq!(r["trivial"], true);
    assert_eq!(r["relation"], "equality");
    let r = json(&run(&["gderiv", f.to_str().unwrap(), "--u", "0,0,1"]));
    assert_eq!(r["trivial"], false);
    assert_eq!(r["homogeneity"]["scaledMember"], true);
}

#[test]
fn gderiv_flags_inclusion_without_surjectivity() {
    let r = json(&run(&["gderiv", corpus("f_zero_degenerate.json").to_str().unwrap()]));
    assert_eq!(r["relation"], "inclusion");
    assert_eq!(r["trivial"], false);
}

#[test]
fn selftest_passes_and_repeats() {
    let a = run(&["selftest", "--format", "json"]);
    if cfg!(feature = "fault-injection") {
        assert_eq!(a.status.code(), Some(1));
        assert!(String::from_utf8_lossy(&a.stderr).contains("fd/lorentz"));
        return;
    }
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(json(&a)["passed"], true);
    assert_eq!(a.stdout, run(&["selftest", "--format", "json"]).stdout);
}
