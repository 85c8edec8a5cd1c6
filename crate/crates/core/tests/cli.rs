//! Exit codes and output formats of the command-line tool.

mod common;

use std::process::{Command, Output};

use common::fixture_path;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tlplan")).args(args).output().unwrap()
}

fn with(sub: &str, problem: &str, extra: &[&str]) -> Output {
    let domain = fixture_path("depots-domain.pddl");
    let problem = fixture_path(&format!("{problem}.pddl"));
    let mut args = vec![sub, domain.to_str().unwrap(), problem.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn plan_exit_codes() {
    assert_eq!(code(&with("plan", "within40", &[])), 0);
    assert_eq!(code(&with("plan", "within20", &[])), 2);
    assert_eq!(code(&with("plan", "swap", &["--max-nodes", "20"])), 3);
    assert_eq!(code(&with("plan", "no-such-problem", &[])), 1);
    assert_eq!(code(&with("plan", "within40", &["--max-nodes", "0"])), 1);
}

#[test]
fn json_plan_output() {
    let out = with("plan", "within25", &["--format", "json"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["status"], "solved");
    assert_eq!(v["plan"]["makespan"], "24");
    assert_eq!(serde_json::from_str::<Value>(&v.to_string()).unwrap(), v);

    let out = with("plan", "within20", &["--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["status"], "unsolvable");
    assert_eq!(v["witness"]["relation"], "min_g > max_g");
}

#[test]
fn written_plans_validate() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("out.plan");
    let out = with("plan", "hold-during", &["-o", plan.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(code(&with("validate", "hold-during", &[plan.to_str().unwrap()])), 0);
}

#[test]
fn validate_exit_codes() {
    let plan = fixture_path("d3-route.plan");
    let plan = plan.to_str().unwrap();
    assert_eq!(code(&with("validate", "within25", &[plan])), 0);
    assert_eq!(code(&with("validate", "within20", &[plan])), 2);
    assert_eq!(code(&with("validate", "within25", &["/nonexistent.plan"])), 1);
}

#[test]
fn tlg_dump_round_trips() {
    let out = with("tlg", "within25", &["--format", "json"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["consistent"], true);
    let g: tlplan::tlg::Tlg = serde_json::from_value(v["after"].clone()).unwrap();
    assert_eq!(serde_json::to_value(&g).unwrap(), v["after"]);
    let text = tlplan::tlg::to_json(&g);
    assert_eq!(tlplan::tlg::to_json(&tlplan::tlg::from_json(&text).unwrap()), text);

    assert_eq!(code(&with("tlg", "two-goals", &[])), 2);
    let dot = stdout(&with("tlg", "within25", &["--format", "dot"]));
    assert!(dot.contains("digraph"));
}
