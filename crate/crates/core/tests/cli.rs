use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn lsasim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lsasim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn fixture(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

#[test]
fn corpus_lists_bundled_scenarios() {
    let out = lsasim(&["corpus"]);
    assert!(out.status.success());
    let names = text(&out.stdout);
    for n in [
        "coastal_radar",
        "mocn_shared",
        "standalone_A",
        "standalone_B",
        "batch_vs_realtime",
        "dca_grid",
    ] {
        assert!(names.lines().any(|l| l == n), "{n} missing");
    }
    let shown = lsasim(&["corpus", "--show", "dca_grid"]);
    assert!(text(&shown.stdout).contains("\"schema\": \"lsasim/1\""));
}

#[test]
fn validate_reports_all_errors_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let mut doc = json(Path::new(&fixture("minimal.json")));
    doc["channels"][0]["bandwidth_mhz"] = 120.into();
    doc["cells"][0]["operators"] = serde_json::json!(["Z"]);
    std::fs::write(&bad, doc.to_string()).unwrap();
    let out = lsasim(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = text(&out.stderr);
    assert!(err.contains("exceeds 100 MHz"), "{err}");
    assert!(err.contains("ReferenceError"), "{err}");

    assert_eq!(lsasim(&["validate", &fixture("minimal.json")]).status.code(), Some(0));
    assert_eq!(lsasim(&["validate", "no_such_thing"]).status.code(), Some(2));
    assert_eq!(lsasim(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn standalone_a_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = lsasim(&["run", "standalone_A", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    for f in [
        "kpi.csv",
        "evac_ledger.csv",
        "coverage.csv",
        "sessions.csv",
        "summary.json",
        "manifest.json",
    ] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    // no incumbent activity: provenance line and header only
    let ledger = std::fs::read_to_string(dir.path().join("evac_ledger.csv")).unwrap();
    assert_eq!(ledger.lines().count(), 2);
    assert_eq!(
        ledger.lines().nth(1),
        Some("grant_id,ordered_at,deadline,confirmed_at,compliant")
    );
    assert_eq!(json(&dir.path().join("summary.json"))["pass"], true);
}

#[test]
fn forced_violation_exits_nonzero_and_names_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let out = lsasim(&[
        "run",
        &fixture("forced_evacuation_violation.json"),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("evacuation_safety"));
    let s = json(&dir.path().join("summary.json"));
    assert_eq!(s["verdicts"]["evacuation_safety"]["status"], "FAIL");
    assert_eq!(s["verdicts"]["exclusivity"]["status"], "FAIL");
    assert_eq!(s["pass"], false);
}

#[test]
fn seed_override_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let out = lsasim(&["run", "dca_grid", "--seed", "99", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["seed"], 99);
    assert_eq!(m["seed_override"], true);
    let hash = m["scenario_sha256"].as_str().unwrap().to_string();
    for f in ["kpi.csv", "evac_ledger.csv", "coverage.csv", "sessions.csv"] {
        let first = std::fs::read_to_string(dir.path().join(f)).unwrap();
        let first = first.lines().next().unwrap().to_string();
        assert!(first.contains(&hash) && first.ends_with("seed=99"), "{f}: {first}");
    }
    // manifest hashes match the files on disk
    for (name, h) in m["files"].as_object().unwrap() {
        let bytes = std::fs::read(dir.path().join(name)).unwrap();
        use sha2::Digest;
        assert_eq!(hex::encode(sha2::Sha256::digest(&bytes)), h.as_str().unwrap(), "{name}");
    }
}

#[test]
fn output_root_comes_from_the_environment() {
    let root = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_lsasim"))
        .args(["run", "dca_grid"])
        .env("LSASIM_OUT", root.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(root.path().join("dca_grid-seed5/summary.json").is_file());
}

#[test]
fn trace_flag_writes_event_log() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert!(lsasim(&["run", &fixture("minimal.json"), "--trace", "--out", d])
        .status
        .success());
    let trace = std::fs::read_to_string(dir.path().join("trace.log")).unwrap();
    let first = trace.lines().next().unwrap();
    assert_eq!(first.split('\t').count(), 5, "{first}");
    assert!(trace.contains("dca_tick"));
}

fn run_into(dir: &Path, scenario: &str, extra: &[&str]) -> PathBuf {
    let mut args = vec!["run", scenario, "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    assert!(lsasim(&args).status.success());
    dir.to_path_buf()
}

#[test]
fn compare_relations_and_schema_mismatch() {
    let tmp = tempfile::tempdir().unwrap();
    let rt = run_into(
        &tmp.path().join("rt"),
        "batch_vs_realtime",
        &["--interface", "realtime"],
    );
    let batch = run_into(
        &tmp.path().join("batch"),
        "batch_vs_realtime",
        &["--interface", "batch"],
    );
    let (a, b) = (rt.to_str().unwrap(), batch.to_str().unwrap());

    let le = lsasim(&["compare", a, b, "--metric", "reaction_mean_tti", "--relation", "<="]);
    assert_eq!(le.status.code(), Some(0), "{}", text(&le.stdout));
    assert!(text(&le.stdout).contains("PASS"));
    let ge = lsasim(&["compare", a, b, "--metric", "reaction_mean_tti", "--relation", ">="]);
    assert_eq!(ge.status.code(), Some(1));
    let same = lsasim(&["compare", a, a, "--metric", "goodput_bps.A"]);
    assert_eq!(same.status.code(), Some(0));

    let missing = lsasim(&["compare", a, b, "--metric", "no_such_metric"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(text(&missing.stderr).contains("schema mismatch"));
}
