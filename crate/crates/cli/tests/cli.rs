use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

use cfgtest::demo::{default_config, demo_harness, DEFAULT_CONFIG};
use cfgtest::report::{analyze, strip_metadata};
use cfgtest::selection::select_tests;
use cfgtest::{compute_diff, ConcretizationPolicy};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cfgtest"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn with_line(key: &str, value: &str) -> String {
    DEFAULT_CONFIG
        .lines()
        .map(|l| if l.starts_with(&format!("{key}=")) { format!("{key}={value}") } else { l.to_string() })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn run_default_passes() {
    let (code, stdout, stderr) = run(&["run"]);
    assert_eq!(code, 0, "{stderr}");
    let v: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["summary"]["failed"], 0);
    assert!(stderr.contains("24 passed"));
}

#[test]
fn run_broken_keyfile_names_fence_test() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.properties", &with_line("failover.keyfile", "@sandbox/.missing/key"));
    let report = dir.path().join("report.json");
    let (code, stdout, _) = run(&["run", "--config", cfg.to_str().unwrap(), "--report", report.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(stdout.is_empty());
    let v: Value = serde_json::from_str(&fs::read_to_string(report).unwrap()).unwrap();
    let failing: Vec<&str> = v["results"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["status"] != "pass")
        .map(|r| r["test_id"].as_str().unwrap())
        .collect();
    assert!(failing.contains(&"failover::fence_with_configured_key"), "{failing:?}");
}

#[test]
fn malformed_inputs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "m.properties", "node.port=1\njunk\n");
    let (code, _, stderr) = run(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(stderr.contains("line 2"), "{stderr}");
    assert_eq!(run(&["run", "--config", "/nonexistent/x.properties"]).0, 2);
    assert_eq!(run(&["run", "--policy", "sometimes"]).0, 2);
    assert_eq!(run(&["no-such-command"]).0, 2);
    let reg = write(dir.path(), "r.registry", "param a.b int default=oops\n");
    assert_eq!(run(&["run", "--registry", reg.to_str().unwrap()]).0, 2);
}

#[test]
fn diff_of_identical_files_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.properties", DEFAULT_CONFIG);
    let (code, stdout, _) = run(&["diff", "--old", a.to_str().unwrap(), "--new", a.to_str().unwrap()]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v, serde_json::json!({"schema_version": 1, "changed": {}, "added": {}, "removed": {}}));
}

#[test]
fn coverage_then_select() {
    let dir = tempfile::tempdir().unwrap();
    let cov = dir.path().join("coverage.json");
    let (code, stdout, _) = run(&["coverage", "--coverage", cov.to_str().unwrap()]);
    assert_eq!(code, 0);
    let stats: Value = serde_json::from_str(&stdout).unwrap();
    assert!(stats["stats"]["percentage"].as_f64().unwrap() >= 85.0);

    let old = write(dir.path(), "old.properties", DEFAULT_CONFIG);
    let same = run(&[
        "select",
        "--old",
        old.to_str().unwrap(),
        "--new",
        old.to_str().unwrap(),
        "--coverage",
        cov.to_str().unwrap(),
    ]);
    assert_eq!(same.0, 0);
    let v: Value = serde_json::from_str(&same.1).unwrap();
    assert_eq!(v["selected"], serde_json::json!([]));

    // one-param diff agrees with the library result
    let new_text = with_line("heartbeat.interval_ms", "2000");
    let new = write(dir.path(), "new.properties", &new_text);
    let (code, stdout, _) = run(&[
        "select",
        "--old",
        old.to_str().unwrap(),
        "--new",
        new.to_str().unwrap(),
        "--coverage",
        cov.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&stdout).unwrap();
    let harness = demo_harness();
    let analysis = analyze(&harness, &default_config(), &ConcretizationPolicy::default()).unwrap();
    let new_store = cfgtest::io::parse_properties(&new_text).unwrap().store;
    let expected = select_tests(
        &compute_diff(&default_config(), &new_store),
        &analysis.coverage,
        harness.registry(),
        &harness.test_ids(),
    )
    .unwrap();
    let got: Vec<String> = serde_json::from_value(v["selected"].clone()).unwrap();
    assert_eq!(got, expected.selected);
    assert!(got.contains(&"heartbeat::timeout_spans_beats".to_string()));

    let unknown = write(dir.path(), "u.properties", &format!("{DEFAULT_CONFIG}\nnot.registered=1\n"));
    let (code, _, _) = run(&[
        "select",
        "--old",
        old.to_str().unwrap(),
        "--new",
        unknown.to_str().unwrap(),
        "--coverage",
        cov.to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
}

#[test]
fn select_warns_on_stale_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let mut file =
        analyze(&demo_harness(), &default_config(), &ConcretizationPolicy::default()).unwrap().coverage_file();
    let dropped = file.suite.pop().unwrap();
    for tests in file.coverage.values_mut() {
        tests.retain(|t| *t != dropped);
    }
    let cov = write(dir.path(), "cov.json", &serde_json::to_string(&file).unwrap());
    let old = write(dir.path(), "old.properties", DEFAULT_CONFIG);
    let new = write(dir.path(), "new.properties", &with_line("node.name", "node-2"));
    let (code, stdout, stderr) = run(&[
        "select",
        "--old",
        old.to_str().unwrap(),
        "--new",
        new.to_str().unwrap(),
        "--coverage",
        cov.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(stderr.contains("stale"), "{stderr}");
    let v: Value = serde_json::from_str(&stdout).unwrap();
    assert!(v["selected"].as_array().unwrap().iter().any(|t| t == dropped.as_str()));
}

#[test]
fn eval_budget_zero_is_clean() {
    let (code, stdout, _) = run(&["eval", "--budget", "0"]);
    assert_eq!(code, 0);
    let v = strip_metadata(serde_json::from_str(&stdout).unwrap());
    assert_eq!(v["quality"]["false_negatives"]["count"], 0);
    assert_eq!(v["quality"]["false_positives"]["count"], 0);
    assert!(v.get("metadata").is_none());
}

#[test]
fn eval_writes_corpus_dir() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let (code, _, _) =
        run(&["eval", "--budget", "5", "--seed", "3", "--corpus-dir", corpus.to_str().unwrap(), "--parallel"]);
    assert!(code == 0 || code == 1);
    let index: Value = serde_json::from_str(&fs::read_to_string(corpus.join("index.json")).unwrap()).unwrap();
    assert_eq!(index["entries"].as_array().unwrap().len(), 6);
    assert_eq!(cfgtest::quality::read_corpus(&corpus).unwrap().len(), 6);
}
