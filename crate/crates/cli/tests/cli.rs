use std::process::{Command, Output};

use serde_json::Value;

fn byzmac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_byzmac")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = byzmac(args);
    assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&ok(args)).unwrap()
}

#[test]
fn demo_example_table_and_json() {
    let table = ok(&["demo-example"]);
    let row_2c = table.lines().find(|l| l.starts_with("2c")).unwrap();
    assert!(row_2c.contains("0.500000000000") && row_2c.ends_with("ok"), "{row_2c}");

    let v = json(&["demo-example", "--format", "json", "--seed", "7"]);
    assert_eq!(v["all_pass"], true);
    assert_eq!(v["rows"].as_array().unwrap().len(), 6);
    assert_eq!(ok(&["demo-example", "--format", "json", "--seed", "7"]), ok(&["demo-example", "--format", "json", "--seed", "7"]));
}

#[test]
fn holevo_of_frozen_example_is_one_bit() {
    let out = ok(&["holevo", "--channel", "builtin:example", "--slot", "1", "--dist", "0.5,0.5", "--freeze", "2=point:2"]);
    assert_eq!(out.trim(), "holevo 1.000000000000");
    let v = json(&["entropy", "--channel", "builtin:example", "--dist", "0.5,0.5", "--freeze", "2=point:2", "--format", "json"]);
    assert!((v["mutual_info"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn input_errors_exit_with_two() {
    let o = byzmac(&["holevo", "--channel", "builtin:example", "--dist", "0.5,0.4", "--freeze", "2=point:2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("distribution not normalized"));

    let o = byzmac(&["holevo", "--channel", "builtin:example", "--dist", "0.5,0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("slot 2 must be frozen"));

    assert_eq!(byzmac(&["region", "--channel", "builtin:example", "--k", "3"]).status.code(), Some(2));
    assert_eq!(byzmac(&["region", "--channel", "builtin:nothing"]).status.code(), Some(2));
    assert_eq!(byzmac(&["simulate", "--adversary", "2:sneaky"]).status.code(), Some(2));
}

#[test]
fn example_region_in_both_orders() {
    let v = json(&["region", "--channel", "builtin:example", "--format", "json"]);
    let rate = |v: &Value, i: usize| v["senders"][i]["rate"].as_f64().unwrap();
    assert!((rate(&v, 0) - 1.0).abs() < 1e-6);
    assert!((rate(&v, 1) - 3f64.log2()).abs() < 1e-6);
    assert_eq!(v["senders"][0]["slot"], 1);

    let v = json(&["region", "--channel", "builtin:example", "--order", "2,1", "--format", "json"]);
    assert!(rate(&v, 0) < 1.0 - 1e-3);
    assert_eq!(v["order"], serde_json::json!([2, 1]));
}

#[test]
fn starved_optimizer_exits_with_one() {
    let o = byzmac(&["region", "--channel", "builtin:example", "--max-evals", "10"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("budget exhausted"));
}

#[test]
fn factorized_three_senders() {
    let v = json(&["region", "--channel", "builtin:factorized:2,3,2", "--k", "3", "--format", "json"]);
    let rates: Vec<f64> = v["senders"].as_array().unwrap().iter().map(|s| s["rate"].as_f64().unwrap()).collect();
    for (r, n) in rates.iter().zip([2.0f64, 3.0, 2.0]) {
        assert!((r - n.log2()).abs() < 1e-6, "{rates:?}");
    }
}

#[test]
fn symcheck_on_example() {
    let v = json(&["symcheck", "--channel", "builtin:example", "--format", "json"]);
    assert_eq!(v["symmetrizable"]["verdict"], "NotSymmetrizable");
    assert_eq!(v["orthogonal"]["verdict"], "CertifiedNot");

    // a jammer confined to its own register cannot imitate the sender
    let v = json(&["symcheck", "--channel", "builtin:factorized:2,2", "--honest", "1", "--jammer", "2", "--format", "json"]);
    assert_eq!(v["symmetrizable"]["verdict"], "NotSymmetrizable");
}

#[test]
fn simulate_example_cases() {
    let v = json(&["simulate", "--order", "2,1", "--adversary", "2:fixed:2", "--trials", "20000", "--seed", "3", "--format", "json"]);
    let mc = v["senders"][0]["err_mc"].as_f64().unwrap();
    assert!((0.49..=0.51).contains(&mc), "{mc}");
    assert_eq!(v["senders"][0]["err_exact"].as_f64().unwrap(), 0.5);

    let v = json(&["simulate", "--trials", "2000", "--format", "json"]);
    for s in v["senders"].as_array().unwrap() {
        assert_eq!(s["err_mc"].as_f64().unwrap(), 0.0);
    }
}

#[test]
fn simulate_csv_is_reproducible() {
    let args = ["simulate", "--channel", "builtin:factorized:2,2", "--code", "random", "--adversary", "2:worst", "--trials", "300", "--seed", "11", "--format", "csv"];
    let a = ok(&args);
    assert_eq!(a, ok(&args));
    assert!(a.starts_with("order,adversary_slot,strategy"));
    assert_eq!(a.lines().count(), 2);
}

#[test]
fn transcripts_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    ok(&["simulate", "--adversary", "1:worst", "--trials", "25", "--transcripts", path.to_str().unwrap()]);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 25);
    for line in text.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert!(v["messages"][0].is_null());
    }
}

#[test]
fn fixture_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&["fixture", "example", "--out", out]);
    let ch = dir.path().join("example.json");
    let d1 = dir.path().join("d1.json");
    let from_file = json(&[
        "region", "--channel", ch.to_str().unwrap(), "--stage1", &format!("povm:{}", d1.display()), "--format", "json",
    ]);
    let builtin = json(&["region", "--channel", "builtin:example", "--format", "json"]);
    assert_eq!(from_file["senders"][0]["rate"], builtin["senders"][0]["rate"]);
    assert_eq!(from_file["senders"][1]["rate"], builtin["senders"][1]["rate"]);

    ok(&["fixture", "factorized", "--alphabets", "2,2", "--out", out]);
    assert!(dir.path().join("local2.json").exists());
}
