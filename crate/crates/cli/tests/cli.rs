use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn models() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("models")
}

fn model(name: &str) -> String {
    models().join(name).display().to_string()
}

fn varkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_varkit")).args(args).env_remove("VARKIT_SEED").output().expect("binary runs")
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut all = vec!["--json"];
    all.extend_from_slice(args);
    let out = varkit(&all);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stderr));
    });
    (out.status.code().unwrap(), v)
}

fn corpus() -> Vec<Vec<String>> {
    let osc = model("oscillator.vk");
    let tr = model("transport.vk");
    let ma = model("monge_ampere.vk");
    let runs: Vec<Vec<&str>> = vec![
        vec!["check-variational", &osc],
        vec!["check-variational", &tr],
        vec!["check-variational", &ma],
        vec!["lagrangian", &osc],
        vec!["lagrangian", &osc, "--energy", "(u^2 + u_x^2)/2"],
        vec!["lagrangian", &ma],
        vec!["symmetry", &osc, "--field", "S"],
        vec!["symmetry", &tr, "--field", "U"],
        vec!["conservation", &osc, "--field", "B", "--current", "E"],
        vec!["conservation", &osc, "--field", "T", "--current", "E"],
        vec!["conservation", &tr, "--field", "T"],
        vec!["ecs", &osc, "--field", "C"],
        vec!["ecs", &tr, "--field", "T"],
        vec!["takens", &osc, "--points", "0.3,1.57,2.0"],
        vec!["takens", &tr],
        vec!["weak-check", &osc, "--section", "s", "--test", "phi", "--domain", "0,1"],
        vec!["weak-check", &tr, "--section", "s", "--test", "phi", "--domain", "0,1"],
        vec!["count", "2", "1"],
    ];
    runs.into_iter().map(|r| r.into_iter().map(String::from).collect()).collect()
}

fn strip_timing(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timing_ms");
    v
}

#[test]
fn exit_codes_follow_the_contract() {
    let expect = [0, 1, 0, 0, 0, 0, 0, 0, 0, 1, 1, 0, 1, 0, 1, 0, 1, 0];
    for (args, code) in corpus().iter().zip(expect) {
        let a: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = varkit(&a);
        assert_eq!(out.status.code(), Some(code), "{args:?}\n{}", String::from_utf8_lossy(&out.stdout));
    }
}

#[test]
fn usage_and_parse_errors_exit_two() {
    let dir = std::env::temp_dir().join(format!("varkit-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.vk");
    std::fs::write(&bad, "space { base: x; fiber: u; order: 2 }\nequation f_u = u_z;\n").unwrap();
    let bad = bad.display().to_string();
    let out = varkit(&["check-variational", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("2:16"));

    let osc = model("oscillator.vk");
    for args in [
        vec!["no-such-command"],
        vec!["check-variational", "/definitely/missing.vk"],
        vec!["symmetry", &osc, "--field", "Nope"],
        vec!["symmetry", &osc],
        vec!["count", "0", "1"],
        vec!["weak-check", &osc, "--section", "s", "--test", "x", "--domain", "0,1"],
        vec!["weak-check", &osc, "--section", "s", "--test", "phi", "--domain", "0,1,2,3"],
        vec!["takens", &osc, "--points", "1:2:3"],
    ] {
        assert_eq!(varkit(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn json_is_deterministic_and_validates() {
    let schema: Value =
        serde_json::from_str(include_str!("../schema/report.schema.json")).expect("schema is JSON");
    let compiled = jsonschema::JSONSchema::compile(&schema).expect("schema compiles");
    for args in corpus() {
        let a: Vec<&str> = args.iter().map(String::as_str).collect();
        let (c1, v1) = json(&a);
        let (c2, v2) = json(&a);
        assert_eq!(c1, c2);
        assert!(compiled.is_valid(&v1), "{args:?} does not validate");
        assert_eq!(strip_timing(v1), strip_timing(v2), "{args:?}");
    }
}

#[test]
fn seed_is_reported_and_overridable() {
    let osc = model("oscillator.vk");
    let (_, v) = json(&["takens", &osc]);
    assert_eq!(v["seed"], 0x5eed_1dea_u64);
    assert_eq!(v["results"]["points"].as_array().unwrap().len(), 5);
    let out = Command::new(env!("CARGO_BIN_EXE_varkit"))
        .args(["--json", "takens", &osc])
        .env("VARKIT_SEED", "7")
        .output()
        .unwrap();
    let w: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(w["seed"], 7);
    assert_ne!(w["results"]["points"], v["results"]["points"]);
}

#[test]
fn count_one_two_is_five() {
    let (code, v) = json(&["count", "1", "2"]);
    assert_eq!(code, 0);
    assert_eq!(v["results"]["count"], 5);
}

#[test]
fn transport_reports_the_helmholtz_witness() {
    let (code, v) = json(&["check-variational", &model("transport.vk")]);
    assert_eq!(code, 1);
    assert_eq!(v["verdict"], "fail");
    assert_eq!(v["results"]["helmholtz"]["H^x_{uu}"], "2");
    assert_eq!(v["checks"][0]["witness"][0]["value"], "2");
}

#[test]
fn takens_on_the_oscillator() {
    let (code, v) = json(&["takens", &model("oscillator.vk"), "--points", "0.3,1.57,2.0", "--trace"]);
    assert_eq!(code, 0);
    assert_eq!(v["results"]["verdict_text"], "variational");
    assert_eq!(v["results"]["lagrangian"], "1/2*u*u_xx + 1/2*u^2");
    assert_eq!(v["results"]["trace"].as_array().unwrap().len(), 5);
}

#[test]
fn text_output_lists_checks() {
    let out = varkit(&["ecs", &model("transport.vk"), "--field", "T"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("[FAIL] ecs T"));
    assert!(text.contains("ECS_u = -2*u_xx"));
    assert!(text.trim_end().ends_with("verdict: fail"));
}

#[test]
fn fixtures_round_trip() {
    for name in ["oscillator.vk", "transport.vk", "monge_ampere.vk"] {
        let text = std::fs::read_to_string(models().join(name)).unwrap();
        let m = varkit_core::dsl::parse(&text).unwrap();
        let again = varkit_core::dsl::parse(&varkit_core::dsl::serialize(&m)).unwrap();
        assert_eq!(m, again, "{name}");
    }
}
