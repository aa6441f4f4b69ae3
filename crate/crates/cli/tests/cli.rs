use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn fmmlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fmmlab")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = fmmlab(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn gen(dir: &TempDir, preset: &str, n: &str, seed: &str) -> String {
    let out = p(dir, &format!("{preset}-{n}-{seed}.scn"));
    ok(&["gen", "--preset", preset, "--nx", n, "--ny", n, "--seed", seed, "--out", &out]);
    out
}

fn json(path: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn gen_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = gen(&dir, "turbulence", "17", "9");
    let b = p(&dir, "again.scn");
    ok(&["gen", "--preset", "turbulence", "--nx", "17", "--ny", "17", "--seed", "9", "--out", &b]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn solve_writes_path_and_field() {
    let dir = TempDir::new().unwrap();
    let scn = gen(&dir, "obstacles", "21", "3");
    let (csv, pgm) = (p(&dir, "path.csv"), p(&dir, "field.pgm"));
    let out = ok(&["solve", "--scenario", &scn, "--out-path", &csv, "--out-field", &pgm]);
    assert!(out.starts_with("cost="), "{out}");
    let csv = fs::read_to_string(&csv).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,y"));
    let rows: Vec<_> = lines.collect();
    assert!(rows.len() >= 2);
    assert!(rows.iter().all(|r| r.split(',').count() == 2));
    assert!(fs::read(&pgm).unwrap().starts_with(b"P"));
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["solve"][..],
        &["gen", "--preset", "uniform", "--out", "/dev/null"],
        &["gen", "--preset", "nowhere", "--seed", "1", "--out", "/dev/null"],
        &["analyze", "--mode", "fast", "--scenario", "x", "--seed", "1", "--report", "r"],
        &["solve", "--scenario", "x", "--bogus"],
    ] {
        assert_eq!(fmmlab(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn domain_errors_exit_1_with_name() {
    let dir = TempDir::new().unwrap();
    let scn = gen(&dir, "uniform", "9", "1");
    let report = p(&dir, "r.json");
    let missing = p(&dir, "missing.scn");
    let cases: [(&[&str], &str); 4] = [
        (&["refine", "--scenario", &scn, "--factor", "3", "--report", &report], "invalid-factor"),
        (
            &["analyze", "--mode", "multirun", "--runs", "1", "--scenario", &scn, "--seed", "1", "--report", &report],
            "need-at-least-2-runs",
        ),
        (
            &["analyze", "--mode", "shadow", "--mantissa-bits", "32", "--scenario", &scn, "--seed", "1", "--report", &report],
            "invalid-config",
        ),
        (&["solve", "--scenario", &missing], "io-error"),
    ];
    for (args, name) in cases {
        let out = fmmlab(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert!(err.contains(name), "{args:?}: {err}");
    }
    assert!(!Path::new(&report).exists());
}

#[test]
fn malformed_scenario_is_a_domain_error() {
    let dir = TempDir::new().unwrap();
    let bad = p(&dir, "bad.scn");
    fs::write(&bad, "this is not a scenario\n").unwrap();
    assert_eq!(fmmlab(&["solve", "--scenario", &bad]).status.code(), Some(1));
}

#[test]
fn multirun_report_has_every_run() {
    let dir = TempDir::new().unwrap();
    let scn = gen(&dir, "turbulence", "15", "2");
    let report = p(&dir, "m.json");
    ok(&["analyze", "--mode", "multirun", "--scenario", &scn, "--seed", "11", "--report", &report]);
    let r = json(&report);
    assert_eq!(r["mode"], "multirun");
    let runs = r["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 10);
    for (i, run) in runs.iter().enumerate() {
        assert_eq!(run["index"].as_u64(), Some(i as u64));
        assert!(run["cost"].is_f64());
    }
    assert!(r["cost"]["sigma"].as_f64().unwrap() >= 0.0);
}

#[test]
fn multirun_jobs_do_not_change_the_report() {
    let dir = TempDir::new().unwrap();
    let scn = gen(&dir, "turbulence", "13", "6");
    let (a, b) = (p(&dir, "a.json"), p(&dir, "b.json"));
    ok(&["analyze", "--mode", "multirun", "--runs", "4", "--scenario", &scn, "--seed", "2", "--report", &a]);
    ok(&["analyze", "--mode", "multirun", "--runs", "4", "--jobs", "3", "--scenario", &scn, "--seed", "2", "--report", &b]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn unperturbed_multirun_repeats_the_plain_cost() {
    let dir = TempDir::new().unwrap();
    let scn = gen(&dir, "obstacles", "15", "4");
    let report = p(&dir, "m.json");
    ok(&[
        "analyze", "--mode", "multirun", "--runs", "3", "--no-perturbation", "--scenario", &scn, "--seed", "2", "--report",
        &report,
    ]);
    let r = json(&report);
    let reference = r["cost"]["reference"].as_f64().unwrap();
    for run in r["runs"].as_array().unwrap() {
        assert_eq!(run["cost"].as_f64().unwrap().to_bits(), reference.to_bits());
    }
    assert_eq!(r["cost"]["sigma"].as_f64(), Some(0.0));
}

#[test]
fn shadow_honours_path_limit_and_sync_sites() {
    let dir = TempDir::new().unwrap();
    let scn = gen(&dir, "turbulence", "7", "5");
    let report = p(&dir, "s.json");
    let base = ["analyze", "--mode", "shadow", "--max-paths", "2", "--mantissa-bits", "96", "--seed", "1"];
    let run = |extra: &[&str]| {
        let mut args = base.to_vec();
        args.extend_from_slice(&["--scenario", &scn, "--report", &report]);
        args.extend_from_slice(extra);
        ok(&args);
        json(&report)
    };
    let r = run(&[]);
    assert!(r["flows"].as_array().unwrap().len() <= 2);
    assert_eq!(r["mantissa_bits"].as_u64(), Some(96));
    let sites = r["unstable_sites"].as_array().unwrap();
    assert!(!sites.is_empty());
    let synced = sites[0]["id"].as_str().unwrap().to_string();
    let r = run(&["--sync-site", &synced]);
    for site in r["unstable_sites"].as_array().unwrap() {
        if site["id"] == synced.as_str() {
            assert_eq!(site["policy"], "sync");
        }
    }
}

#[test]
fn stochastic_report_shape() {
    let dir = TempDir::new().unwrap();
    let scn = gen(&dir, "turbulence", "11", "2");
    let report = p(&dir, "s.json");
    ok(&["analyze", "--mode", "stochastic", "--scenario", &scn, "--seed", "1", "--report", &report]);
    let r = json(&report);
    assert_eq!(r["cost"]["samples"].as_array().unwrap().len(), 3);
    for k in ["unstable_branching", "cancellation", "unstable_multiplication", "unstable_conversion"] {
        assert!(r["counters"][k].is_u64(), "{k}");
    }
}

#[test]
fn refine_report_shape() {
    let dir = TempDir::new().unwrap();
    let scn = gen(&dir, "uniform", "11", "1");
    let report = p(&dir, "r.json");
    ok(&["refine", "--scenario", &scn, "--factor", "4", "--report", &report]);
    let r = json(&report);
    let res = r["resolutions"].as_array().unwrap();
    assert_eq!(res[0]["nx"].as_u64(), Some(11));
    assert_eq!(res[1]["nx"].as_u64(), Some(41));
    assert_eq!(r["factor"].as_u64(), Some(4));
    assert!(r["relative_difference"].as_f64().unwrap() >= 0.0);
}
