//! End-to-end runs of the compiled binary: exit codes, file outputs, and
//! byte-for-byte determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use seqprice::io::instance_from_json;

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seqprice"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary should launch")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn generate_writes_a_canonical_instance_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "gen.json",
        r#"{"instance": {"generator": "harmonic", "m": 8}, "output": "h8"}"#,
    );
    let out = run(&["generate", "--config", &cfg, "--out", "run"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("support size: 8"), "stdout: {text}");

    let raw = fs::read_to_string(tmp.path().join("run/h8.instance.json")).unwrap();
    let inst = instance_from_json(&raw).unwrap();
    assert_eq!(inst.dist.support().len(), 8);
    assert_eq!(inst.k, 1);
    let again = seqprice::io::instance_to_json(&inst).unwrap() + "\n";
    assert_eq!(raw, again, "canonical file should re-serialize to itself");

    let summary = fs::read_to_string(tmp.path().join("run/h8.summary.json")).unwrap();
    assert!(summary.contains("\"status\": \"ok\""));
}

#[test]
fn evaluate_reports_exact_revenue_and_checks_assertions() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "eval.json",
        r#"{
  "instance": {"generator": "correlated_pair", "m": 4, "k": 1},
  "policies": [{"name": "blind_k"}],
  "assertions": [{"policy": "blind_k", "at_least": "87/1000", "of": "lp_bound"}],
  "output": "pair"
}"#,
    );
    let out = run(&["evaluate", "--config", &cfg, "--out", "run"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("PASS"), "stdout: {}", stdout(&out));

    let report = fs::read_to_string(tmp.path().join("run/pair.report.json")).unwrap();
    assert!(report.contains("\"exact\": \"25/96\""), "report: {report}");
    assert!(report.contains("\"lp_bound\": \"25/48\""), "report: {report}");
}

#[test]
fn failed_assertion_exits_one_but_still_writes_the_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "eval.json",
        r#"{
  "instance": {"generator": "correlated_pair", "m": 4, "k": 1},
  "policies": [{"name": "blind_k"}],
  "assertions": [{"policy": "blind_k", "at_least": "1", "of": "lp_bound"}],
  "output": "pair"
}"#,
    );
    let out = run(&["evaluate", "--config", &cfg, "--out", "run"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("FAIL"));
    let summary = fs::read_to_string(tmp.path().join("run/pair.summary.json")).unwrap();
    assert!(summary.contains("\"status\": \"failed\""));
    assert!(summary.contains("\"holds\": false"));
}

#[test]
fn bad_config_exits_two_with_a_named_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad.json",
        r#"{"instance": {"generator": "zipf", "m": 4}}"#,
    );
    let out = run(&["generate", "--config", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("unknown generator 'zipf'"), "stderr: {err}");
    assert!(err.contains("harmonic"), "should list known generators: {err}");

    let out = run(&["generate"], tmp.path());
    assert_eq!(out.status.code(), Some(2), "missing --config must be an error");
}

#[test]
fn audit_flags_a_table_that_charges_the_reported_bid() {
    let tmp = tempfile::tempdir().unwrap();
    let inst_path = tmp.path().join("inst.json");
    fs::write(
        &inst_path,
        r#"{"n": 1, "k": 1, "support": [["1"], ["2"]], "mass": ["1/2", "1/2"]}"#,
    )
    .unwrap();
    let pol_path = tmp.path().join("pol.json");
    fs::write(
        &pol_path,
        r#"{"kind": "direct", "n": 1, "k": 1, "rows": [
  {"profile": ["1"], "x": ["1"], "p": ["1"]},
  {"profile": ["2"], "x": ["1"], "p": ["2"]}
]}"#,
    )
    .unwrap();
    let cfg = write_config(
        tmp.path(),
        "audit.json",
        &format!(
            r#"{{
  "instance": {{"file": {ip:?}}},
  "policies": [{{"name": "file", "file": {pp:?}}}],
  "output": "own_bid"
}}"#,
            ip = inst_path.to_str().unwrap(),
            pp = pol_path.to_str().unwrap()
        ),
    );
    let out = run(&["audit", "--config", &cfg, "--out", "run"], tmp.path());
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr(&out));
    let findings =
        fs::read_to_string(tmp.path().join("run/own_bid.findings.json")).unwrap();
    // underreporting is profitable, and the payment beats the telescoping bound
    assert!(findings.contains("\"kind\": \"dsic\""), "findings: {findings}");
    assert!(findings.contains("\"kind\": \"price_bound\""), "findings: {findings}");

    let summary = fs::read_to_string(tmp.path().join("run/own_bid.summary.json")).unwrap();
    assert!(summary.contains("\"finding_count\": 2"), "summary: {summary}");
}

#[test]
fn audit_passes_a_truthful_policy() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "audit.json",
        r#"{
  "instance": {"generator": "correlated_pair", "m": 4, "k": 1},
  "policies": [{"name": "single_price"}],
  "output": "posted"
}"#,
    );
    let out = run(&["audit", "--config", &cfg, "--out", "run", "--format", "csv"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("0 finding(s)"));
    let findings = fs::read_to_string(tmp.path().join("run/posted.findings.csv")).unwrap();
    assert_eq!(findings.lines().count(), 1, "header only: {findings}");
}

#[test]
fn report_sweep_is_byte_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "sweep.json",
        r#"{"report": {"sweep": "harmonic", "m": [4, 16]}, "output": "sweep"}"#,
    );
    for dir in ["a", "b"] {
        let out = run(&["report", "--config", &cfg, "--out", dir, "--format", "csv"], tmp.path());
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    }
    for file in ["sweep.report.csv", "sweep.plot.txt"] {
        let a = fs::read(tmp.path().join("a").join(file)).unwrap();
        let b = fs::read(tmp.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
    // summaries list the written paths, so compare them modulo the out dir
    let sa = fs::read_to_string(tmp.path().join("a/sweep.summary.json")).unwrap();
    let sb = fs::read_to_string(tmp.path().join("b/sweep.summary.json")).unwrap();
    assert_eq!(sa.replace("\"a/", "\"b/"), sb);
    let report = fs::read_to_string(tmp.path().join("a/sweep.report.csv")).unwrap();
    let mut lines = report.lines();
    assert_eq!(
        lines.next(),
        Some("m,revenue,osw,ratio,revenue_exact,osw_exact,ratio_exact")
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "4");
    assert_eq!(row[6], "12/25", "harmonic m=4 sweep ratio should be 1/H_4");
}

#[test]
fn monte_carlo_mode_respects_the_seed_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "mc.json",
        r#"{
  "instance": {"generator": "correlated_pair", "m": 4, "k": 1},
  "policies": [{"name": "blind_k"}],
  "evaluation": {"mode": "mc", "trials": 500},
  "output": "mc"
}"#,
    );
    let run_once = |dir: &str, seed: &str| {
        let out = run(
            &["evaluate", "--config", &cfg, "--out", dir, "--seed", seed],
            tmp.path(),
        );
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
        fs::read_to_string(tmp.path().join(dir).join("mc.report.json")).unwrap()
    };
    let a = run_once("a", "3");
    let b = run_once("b", "3");
    assert_eq!(a, b, "same seed must reproduce the same estimate");
    assert!(a.contains("\"seed\": 3"), "the --seed flag should reach the estimator: {a}");
    assert!(a.contains("\"half_width_95\""), "report: {a}");
}
