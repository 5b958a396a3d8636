use std::io::Write;
use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use serde_json::Value;
use tempfile::TempDir;

fn pwrap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pwrap")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::File::create(&path).unwrap().write_all(text.as_bytes()).unwrap();
    path.to_str().unwrap().to_string()
}

fn letters(dir: &Path, n: usize) -> String {
    let text: String = (0..n).map(|i| format!("{}\n", (b'a' + i as u8) as char)).collect();
    write(dir, "letters.txt", &text)
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn oracle_on_count() {
    let dir = TempDir::new().unwrap();
    let ds = letters(dir.path(), 6);
    let out = pwrap(&["oracle", "down-sensitivity", "--lambda", "3", "--dataset", &ds, "--blackbox", "builtin:count"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["value"], 3.0);
    let out = pwrap(&["oracle", "lipschitz", "--lambda", "3", "--dataset", &ds, "--blackbox", "builtin:count"]);
    assert_eq!(json(&out)["value"], true);
}

#[test]
fn autosense_on_a_constant() {
    let dir = TempDir::new().unwrap();
    let ds = letters(dir.path(), 6);
    let out = pwrap(&[
        "wrap", "--mechanism", "autosense", "--epsilon", "2", "--range", "list:0..10", "--dataset", &ds, "--blackbox",
        "builtin:constant:5", "--seed", "7",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["result"], 5.0);
    assert_eq!(r["profile"], "paper-faithful");
    for key in ["mechanism", "params", "result", "released", "queries", "realized_depth", "seed", "profile"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let ds = letters(dir.path(), 8);
    let args = [
        "wrap", "--mechanism", "small-diameter", "--epsilon", "1", "--r", "2", "--range", "interval:0:2", "--dataset", &ds,
        "--blackbox", "builtin:count", "--seed", "11",
    ];
    let a = pwrap(&args);
    let b = pwrap(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let plugin = write(dir.path(), "size.sh", "while read line; do set -- $line; echo $#; done\n");
    let args = [
        "wrap", "--mechanism", "subset-extension", "--epsilon", "3", "--delta", "0.05", "--unsafe-test-constants",
        "--dataset", &ds, "--blackbox", &format!("plugin:sh {plugin}"), "--seed", "5",
    ];
    let a = pwrap(&args);
    let b = pwrap(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let r = json(&a);
    assert!(r["profile"].as_str().unwrap().contains("UNSAFE"));
    assert_eq!(r["queries"], 256);
}

#[test]
fn plugin_sees_sorted_identifiers() {
    let dir = TempDir::new().unwrap();
    let ds = write(dir.path(), "ds.txt", "c\na\nb\n");
    let log = dir.path().join("log.txt");
    let plugin = write(dir.path(), "log.sh", &format!("while read line; do echo \"[$line]\" >> {}; echo 1; done\n", log.display()));
    let out = pwrap(&["oracle", "down-sensitivity", "--lambda", "3", "--dataset", &ds, "--blackbox", &format!("plugin:sh {plugin}")]);
    assert_eq!(out.status.code(), Some(0));
    let seen = std::fs::read_to_string(log).unwrap();
    let lines: Vec<&str> = seen.lines().collect();
    assert_eq!(lines.len(), 8);
    assert!(lines.contains(&"[a b c]"));
    assert!(lines.contains(&"[a c]"));
    assert!(lines.contains(&"[]"));
}

#[test]
fn garbage_from_a_plugin_exits_3_with_partial_ledger() {
    let dir = TempDir::new().unwrap();
    let ds = letters(dir.path(), 5);
    let plugin = write(dir.path(), "bad.sh", "i=0\nwhile read line; do i=$((i+1)); if [ $i -gt 3 ]; then echo oops; else echo 1; fi; done\n");
    let out = pwrap(&[
        "wrap", "--mechanism", "lipschitz-filter", "--r", "2", "--dataset", &ds, "--blackbox", &format!("plugin:sh {plugin}"),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let r = json(&out);
    assert_eq!(r["queries"], 3);
    assert!(r["result"].is_null());
    assert!(r["error"].as_str().unwrap().contains("oops"));
}

#[test]
fn hanging_plugin_times_out_with_exit_3() {
    let dir = TempDir::new().unwrap();
    let ds = letters(dir.path(), 4);
    let plugin = write(dir.path(), "hang.sh", "read line; echo 1; sleep 60\n");
    let start = Instant::now();
    let out = pwrap(&[
        "wrap", "--mechanism", "lipschitz-filter", "--r", "1", "--dataset", &ds, "--blackbox", &format!("plugin:sh {plugin}"),
        "--plugin-timeout", "0.5",
    ]);
    assert!(start.elapsed() < Duration::from_secs(20));
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["queries"], 1);
}

#[test]
fn validation_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let ds = letters(dir.path(), 4);
    let cases: Vec<Vec<&str>> = vec![
        vec!["wrap", "--mechanism", "autosense", "--epsilon", "1", "--dataset", &ds, "--blackbox", "builtin:count"],
        vec!["wrap", "--mechanism", "autosense", "--epsilon", "-1", "--range", "list:0..4", "--dataset", &ds, "--blackbox", "builtin:count"],
        vec!["wrap", "--mechanism", "tahoe", "--epsilon", "1", "--dataset", &ds, "--blackbox", "builtin:count"],
        vec!["wrap", "--mechanism", "small-diameter", "--epsilon", "1", "--dataset", &ds, "--blackbox", "builtin:count"],
        vec!["wrap", "--mechanism", "double-mono", "--epsilon", "1", "--r", "3", "--dataset", &ds, "--blackbox", "builtin:count"],
        vec!["wrap", "--mechanism", "autosense", "--epsilon", "1", "--range", "list:3..1", "--dataset", &ds, "--blackbox", "builtin:count"],
        vec!["wrap", "--mechanism", "autosense", "--epsilon", "1", "--dataset", &ds, "--blackbox", "builtin:nope"],
        vec!["wrap", "--mechanism", "nope", "--epsilon", "1", "--dataset", &ds, "--blackbox", "builtin:count"],
        vec!["wrap", "--mechanism", "tahoe", "--epsilon", "1", "--delta", "0.1", "--dataset", "/no/such/file", "--blackbox", "builtin:count"],
    ];
    for args in cases {
        assert_eq!(pwrap(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn duplicates_need_the_multiset_flag() {
    let dir = TempDir::new().unwrap();
    let ds = write(dir.path(), "dup.txt", "1\n1\n2\n");
    let base = ["oracle", "down-sensitivity", "--lambda", "1", "--dataset", &ds, "--blackbox", "builtin:sum-clamped:0:5"];
    assert_eq!(pwrap(&base).status.code(), Some(2));
    let mut args = base.to_vec();
    args.push("--multiset");
    let out = pwrap(&args);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["value"], 2.0);
}

#[test]
fn budget_overflow_exits_4() {
    let dir = TempDir::new().unwrap();
    let ds = letters(dir.path(), 12);
    let out = pwrap(&["oracle", "down-sensitivity", "--lambda", "6", "--dataset", &ds, "--blackbox", "builtin:count", "--budget", "100"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn bottom_results_exit_0() {
    // The median of a balanced 0/1000 multiset jumps by 500 under one removal.
    let dir = TempDir::new().unwrap();
    let ds = write(dir.path(), "balanced.txt", &"0\n1000\n".repeat(7));
    let out = pwrap(&[
        "wrap", "--mechanism", "tahoe", "--epsilon", "1", "--delta", "0.05", "--unsafe-test-constants", "--multiset",
        "--dataset", &ds, "--blackbox", "builtin:median", "--seed", "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["result"], "bottom");
}

#[test]
fn audit_on_the_hard_instance() {
    let out = pwrap(&[
        "audit", "--mechanism", "small-diameter", "--epsilon", "1", "--r", "4", "--range", "interval:0:4", "--blackbox",
        "builtin:hard-instance:n=8,seed=3", "--trials", "2000", "--bins", "10",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    assert_eq!(r["audit"]["heuristic"], true);
    assert_eq!(r["audit"]["trials"], 2000);
    assert!(r["audit"]["epsilon_hat"].as_f64().unwrap() <= 1.5);
}

#[test]
fn bench_fans_out_over_threads() {
    let dir = TempDir::new().unwrap();
    let ds = letters(dir.path(), 6);
    let out = pwrap(&[
        "bench", "--mechanism", "small-diameter", "--epsilon", "1", "--r", "2", "--range", "interval:0:2", "--dataset", &ds,
        "--blackbox", "builtin:constant:1", "--runs", "40", "--threads", "4",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["runs"], 40);
    assert_eq!(r["bottoms"], 0);
    assert!(r["wall_time_ms"].as_f64().unwrap() >= 0.0);
}
