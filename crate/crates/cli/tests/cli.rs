//! The binary end to end: outputs, exit codes and reruns.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scoreline"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&read(dir.join("manifest.json"))).unwrap()
}

/// A small simulated league written to `<root>/sim`.
fn simulated(root: &Path, seed: &str) -> PathBuf {
    let out = root.join("sim");
    let o = run(&out, &["simulate", "--teams", "6", "--seasons", "2", "--seed", seed, "--rho", "-0.05"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out.join("dataset.csv")
}

#[test]
fn ingest_writes_a_canonical_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("E0.csv");
    std::fs::write(
        &raw,
        "Div,Date,HomeTeam,AwayTeam,FTHG,FTAG\nE0,16/08/2014,Arsenal,Chelsea,2,1\nE0,23/08/2014,Chelsea,Arsenal,,\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = run(&out, &["ingest", "--data", raw.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let body = read(out.join("dataset.csv"));
    assert_eq!(body.lines().count(), 2, "{body}");
    assert!(body.contains("Arsenal") && body.contains("Chelsea"));
    let m = manifest(&out);
    assert_eq!(m["command"], "ingest");
    assert_eq!(m["outputs"][0], "dataset.csv");
}

#[test]
fn malformed_header_is_a_fatal_error() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("bad.csv");
    std::fs::write(&raw, "Date,Home,Away\n16/08/2014,A,B\n").unwrap();
    let out = dir.path().join("out");
    let o = run(&out, &["ingest", "--data", raw.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    assert!(!out.join("manifest.json").exists());
}

#[test]
fn missing_dataset_is_a_fatal_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&dir.path().join("out"), &["fit", "--data", "/nonexistent/dataset.csv"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn simulate_records_its_seed_streams() {
    let dir = tempfile::tempdir().unwrap();
    simulated(dir.path(), "7");
    let m = manifest(&dir.path().join("sim"));
    assert_eq!(m["seed"], 7);
    let tags: Vec<&str> = m["streams"].as_array().unwrap().iter().map(|s| s[0].as_str().unwrap()).collect();
    assert_eq!(tags, ["sim-ratings", "sim-season/0", "sim-season/1"]);
    let truth: serde_json::Value = serde_json::from_str(&read(dir.path().join("sim/truth.json"))).unwrap();
    assert!(truth.is_object());
}

#[test]
fn fit_writes_parameters_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulated(dir.path(), "3");
    let out = dir.path().join("fit");
    let o = run(&out, &["fit", "--data", data.to_str().unwrap(), "--model", "dc"]);
    assert!(code(&o) <= 1, "{}", String::from_utf8_lossy(&o.stderr));
    let fit: serde_json::Value = serde_json::from_str(&read(out.join("fit.json"))).unwrap();
    assert_eq!(fit["model"], "dc");
    assert!(fit["log_likelihood"].as_f64().unwrap() < 0.0);
    assert!(!read(out.join("params.txt")).is_empty());
}

#[test]
fn bootstrap_needs_marco() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulated(dir.path(), "3");
    let o = run(
        &dir.path().join("fit"),
        &["fit", "--data", data.to_str().unwrap(), "--model", "dc", "--n-boot", "5"],
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn single_point_grid_picks_that_point() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulated(dir.path(), "4");
    let out = dir.path().join("tune");
    let o = run(&out, &["tune-xi", "--data", data.to_str().unwrap(), "--xi-grid", "0"]);
    assert!(code(&o) <= 1, "{}", String::from_utf8_lossy(&o.stderr));
    let t: serde_json::Value = serde_json::from_str(&read(out.join("tuning.json"))).unwrap();
    assert_eq!(t["best_xi"], 0.0);
    assert_eq!(read(out.join("sxi.csv")).lines().count(), 2);

    let o = run(&out, &["tune-xi", "--data", data.to_str().unwrap(), "--xi-grid", "0,0.01,0.02"]);
    assert!(code(&o) <= 1);
    assert_eq!(read(out.join("sxi.csv")).lines().count(), 4);
}

#[test]
fn missing_models_file_is_a_fatal_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulated(dir.path(), "5");
    let o = run(
        &dir.path().join("bt"),
        &["backtest", "--data", data.to_str().unwrap(), "--models-file", "/nonexistent/models.json"],
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn identical_models_have_a_zero_difference() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulated(dir.path(), "5");
    let models = dir.path().join("models.json");
    std::fs::write(
        &models,
        r#"[{"name":"a","kind":"dc","xi":0.0},{"name":"b","kind":"dc","xi":0.0}]"#,
    )
    .unwrap();
    let out = dir.path().join("bt");
    let o = run(
        &out,
        &[
            "backtest",
            "--data",
            data.to_str().unwrap(),
            "--models-file",
            models.to_str().unwrap(),
            "--markets",
            "1x2",
            "--n-b",
            "50",
        ],
    );
    assert!(code(&o) <= 1, "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(out.join("diff_1x2.csv")).unwrap();
    let col = rdr.headers().unwrap().iter().position(|h| h == "diff").expect("diff column");
    let mut n = 0;
    for rec in rdr.records() {
        let v: f64 = rec.unwrap()[col].parse().unwrap();
        assert_eq!(v, 0.0);
        n += 1;
    }
    assert!(n > 0);
    let s: serde_json::Value = serde_json::from_str(&read(out.join("summary.json"))).unwrap();
    assert_eq!(s["mean_rps"]["a"], s["mean_rps"]["b"]);
}

#[test]
fn same_seed_gives_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulated(dir.path(), "6");
    let args = ["backtest", "--data", data.to_str().unwrap(), "--markets", "1x2,uo2.5", "--n-b", "200", "--seed", "9"];
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let oa = run(&a, &args);
    let ob = run(&b, &["--jobs", "1"].iter().chain(args.iter()).copied().collect::<Vec<_>>());
    assert!(code(&oa) <= 1 && code(&ob) <= 1);
    assert_eq!(oa.stdout, ob.stdout);
    for name in ["ledger.csv", "summary.json", "skipped.json", "diff_1x2.csv", "diff_uo2.5.csv"] {
        assert_eq!(read(a.join(name)), read(b.join(name)), "{name}");
    }
    let (ma, mb) = (manifest(&a), manifest(&b));
    assert_eq!(ma["streams"], mb["streams"]);
    assert_eq!(ma["outputs"], mb["outputs"]);
}

#[test]
fn diagnose_writes_a_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulated(dir.path(), "8");
    let out = dir.path().join("diag");
    let o = run(&out, &["diagnose", "--data", data.to_str().unwrap(), "--n-rep", "99", "--per-league"]);
    assert!(code(&o) <= 1, "{}", String::from_utf8_lossy(&o.stderr));
    let d: serde_json::Value = serde_json::from_str(&read(out.join("diagnostics.json"))).unwrap();
    assert!(d["caveat"].is_string());
    let groups = d["groups"].as_array().unwrap();
    assert!(!groups.is_empty());
    assert_eq!(groups[0]["label"], "all");
    let p = groups[0]["pearson"]["p_value"].as_f64().unwrap();
    assert!(p > 0.0 && p <= 1.0);
    assert_eq!(manifest(&out)["streams"].as_array().unwrap().len(), 7);
}
