use std::process::Command;

use qsl::cli::{render_json, run, Rendered};
use serde_json::Value;

fn qsl(args: &[&str]) -> Rendered {
    run(std::iter::once("qsl").chain(args.iter().copied()))
}

fn json(args: &[&str]) -> (i32, Value, String) {
    let mut all = args.to_vec();
    all.push("--format=json");
    let out = qsl(&all);
    let value: Value = serde_json::from_str(&out.output).unwrap_or_else(|e| panic!("{e}: {}", out.output));
    (out.status, value, out.output)
}

#[test]
fn free_on_a_singleton_heap() {
    let out = qsl(&["wp", "--mode=wp", "--prog=free.hp", "--post=[emp]", "--state=x=1; heap=1:7"]);
    assert_eq!(out, Rendered { status: 0, output: "1\n".to_string() });
}

#[test]
fn binary_runs_the_same_command() {
    let out = Command::new(env!("CARGO_BIN_EXE_qsl"))
        .args(["wp", "--mode=wp", "--prog=free.hp", "--post=[emp]", "--state=x=1; heap=1:7"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "1\n");
}

#[test]
fn eval_reports_worked_values() {
    let out = qsl(&["eval", "--addrs=5", "--vmax=5", "--expr=1 |-> 2 -* size", "--state=x=0; heap=1:2,2:3,4:5"]);
    assert_eq!(out.output, "inf\n");
    let out = qsl(&["eval", "--addrs=5", "--vmax=5", "--expr=3 |-> 4 -* size", "--state=x=0; heap=1:2,2:3,4:5"]);
    assert_eq!(out.output, "4\n");
}

#[test]
fn json_reports_round_trip_byte_for_byte() {
    let commands: [&[&str]; 4] = [
        &["wp", "--mode=awlep", "--code=x := uniform(0, 2)", "--post=[x = 1]", "--vars=x", "--addrs=1"],
        &["oracle", "--code=x := new(0); free(x)", "--post=[emp]", "--state=x=0"],
        &["check-duality", "--code={ x := 1 } [1/3] { x := 2 }", "--post=[x = 1]"],
        &["laws", "--laws=sepcon.comm", "--trials=5", "--seed=7"],
    ];
    for args in commands {
        let (status, value, text) = json(args);
        assert_eq!(status, 0, "{text}");
        assert_eq!(render_json(&value), text);
        for key in ["command", "config", "results"] {
            assert!(value.get(key).is_some(), "{key} missing in {text}");
        }
    }
}

#[test]
fn sepcon_laws_report_no_violations() {
    let (status, value, _) = json(&["laws", "--laws=sepcon.*", "--trials=20", "--seed=7"]);
    assert_eq!(status, 0);
    let results = value["results"].as_array().unwrap();
    assert!(results.len() >= 5);
    assert!(results.iter().all(|r| r["violations"] == 0));
}

#[test]
fn known_refutation_exits_with_a_witness() {
    let (status, value, _) = json(&["laws", "--laws=list.ls_split_upper", "--trials=10", "--seed=1"]);
    assert_eq!(status, 1);
    assert!(!value["witnesses"].as_array().unwrap().is_empty());
}

#[test]
fn frame_converse_is_refuted() {
    let out = qsl(&["check-frame", "--code=<x> := 0", "--pre=[emp]", "--frame=x ~> 0", "--direction=converse"]);
    assert_eq!(out.status, 1, "{}", out.output);
    assert!(out.output.contains("fails at"));
    let out = qsl(&["check-frame", "--code=<x> := 0", "--pre=[emp]", "--frame=x ~> 0"]);
    assert_eq!(out.status, 0, "{}", out.output);
}

#[test]
fn frame_side_condition_is_an_input_error() {
    let out = qsl(&["check-frame", "--code=x := 1", "--pre=[emp]", "--frame=x |-> -"]);
    assert_eq!(out.status, 2);
}

#[test]
fn exit_codes_distinguish_failures() {
    assert_eq!(qsl(&["eval", "--expr=1 +", "--state=x=0"]).status, 2);
    assert_eq!(qsl(&["wp", "--prog=missing.hp", "--post=1"]).status, 2);
    assert_eq!(qsl(&["frobnicate"]).status, 2);
    let exceeded = qsl(&["wp", "--vmax=4", "--code=x := x + 10", "--post=1", "--state=x=1"]);
    assert_eq!(exceeded.status, 3, "{}", exceeded.output);
    let exhausted = qsl(&["wp", "--addrs=1", "--vmax=4", "--code=x := new(0); y := new(0)", "--post=1", "--state=x=0; heap="]);
    assert_eq!(exhausted.status, 3, "{}", exhausted.output);
    let budget = qsl(&[
        "wp",
        "--tol=0",
        "--max-iters=3",
        "--code=while (x = 0) { { x := 1 } [1/2] { skip } }",
        "--post=1",
        "--state=x=0",
    ]);
    assert_eq!(budget.status, 4, "{}", budget.output);
}

#[test]
fn conservativity_and_soundness_commands() {
    let out = qsl(&["check-conservativity", "--code=free(x)", "--pre=exists v. x |-> v", "--post=emp"]);
    assert_eq!(out.status, 0, "{}", out.output);
    let out = qsl(&["check-soundness", "--code={ x := 1 } [1/2] { y := new(x) }", "--post=[x = 1] + size"]);
    assert_eq!(out.status, 0, "{}", out.output);
}

#[test]
fn invariant_command_uses_the_trailing_loop() {
    let inv = "(len(r, 0) ** ls(hd, 0)) + 1/2 * [hd != 0] * (len(hd, 0) ** ls(r, 0))";
    let out = qsl(&[
        "check-invariant",
        "--prog=lossy_reversal.hp",
        "--vmin=0",
        "--vmax=2",
        "--addrs=2",
        "--post=len(r, 0)",
        &format!("--inv={inv}"),
    ]);
    assert_eq!(out.status, 0, "{}", out.output);
    let out = qsl(&["check-invariant", "--prog=lossy_reversal.hp", "--vmin=0", "--vmax=2", "--addrs=2", "--post=len(r, 0)", "--inv=0"]);
    assert_eq!(out.status, 1, "{}", out.output);
}

#[test]
fn lossy_reversal_case_study() {
    let out = qsl(&["casestudy", "lossy-reversal", "--len=2"]);
    assert_eq!(out.status, 0);
    assert!(out.output.contains("expected reversed length: computed 1 = reference 1"), "{}", out.output);
}

#[test]
fn config_files_in_both_forms() {
    let dir = std::env::temp_dir();
    let text = dir.join("qsl-cli-test.cfg");
    std::fs::write(&text, "vars=x vmin=0 vmax=3 addrs=2\n").unwrap();
    let (_, value, _) = json(&["eval", &format!("--config={}", text.display()), "--expr=size", "--state=x=0; heap=1:3"]);
    assert_eq!(value["config"]["addrs"], 2);
    let json_cfg = dir.join("qsl-cli-test.json");
    std::fs::write(&json_cfg, serde_json::to_string(&value["config"]).unwrap()).unwrap();
    let (status, again, _) = json(&["eval", &format!("--config={}", json_cfg.display()), "--expr=size", "--state=x=0; heap=1:3"]);
    assert_eq!(status, 0);
    assert_eq!(again["results"], value["results"]);
}
