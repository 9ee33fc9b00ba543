//! End-to-end checks of the binary: exit codes, file formats, determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_congruence"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("congruence-cli-test-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort_by(|a, b| a.0.cmp(&b.0));
    files
}

#[test]
fn synth_is_byte_identical_across_runs() {
    let root = tmp("synth-det");
    let a = root.join("a");
    let b = root.join("b");
    for dir in [&a, &b] {
        let out = run(&[
            "synth",
            "marginal-flaw",
            "--n",
            "200",
            "--alpha",
            "3",
            "--seed",
            "3",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr_of(&out));
    }
    let fa = dir_bytes(&a);
    assert_eq!(fa.len(), 3, "dataset plus two model tables");
    assert_eq!(fa, dir_bytes(&b));
}

#[test]
fn unknown_generator_is_a_usage_error() {
    let out = run(&["synth", "nonsense", "--out", "/tmp/unused"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("nonsense"));
}

#[test]
fn mcmd_study_requires_a_scenario() {
    let root = tmp("study-args");
    let out = run(&["synth", "mcmd-study", "--out", root.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("--scenario"));

    let ok = run(&[
        "synth",
        "mcmd-study",
        "--scenario",
        "diff-mean-lower-var",
        "--noise",
        "homoscedastic",
        "--n",
        "50",
        "--m",
        "30",
        "--out",
        root.to_str().unwrap(),
    ]);
    assert!(ok.status.success(), "{}", stderr_of(&ok));
    assert!(root.join("ground.ndjson").exists());
    assert!(root.join("comparison.ndjson").exists());
}

#[test]
fn malformed_row_reports_line_and_exits_2() {
    let root = tmp("malformed");
    let bad = root.join("bad.ndjson");
    fs::write(&bad, "{\"x\":[0.1],\"y\":1.0}\n{\"x\":[0.2] \"y\":2.0}\n").unwrap();
    let out = run(&[
        "cce",
        "--ground-truth",
        bad.to_str().unwrap(),
        "--self-check",
        "--out",
        root.join("r.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains(":2:"), "line number in: {}", stderr_of(&out));
}

#[test]
fn missing_predictions_without_self_check_is_usage() {
    let root = tmp("missing-preds");
    let ds = root.join("d.ndjson");
    fs::write(&ds, "{\"x\":[0.0],\"y\":0.0}\n").unwrap();
    let out = run(&[
        "cce",
        "--ground-truth",
        ds.to_str().unwrap(),
        "--out",
        root.join("r.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn self_check_is_near_zero() {
    let root = tmp("self-check");
    let out = run(&[
        "synth",
        "dispersion-profile",
        "--n",
        "300",
        "--seed",
        "1",
        "--out",
        root.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let report = root.join("self.json");
    let out = run(&[
        "cce",
        "--ground-truth",
        root.join("dataset.ndjson").to_str().unwrap(),
        "--self-check",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let mean = read_json(&report)["mean"].as_f64().unwrap();
    assert!(mean < 1e-6, "self-check mean {mean}");
}

#[test]
fn exact_dgp_predictions_score_under_the_frozen_threshold() {
    // default hyperparameters end to end, n = 2000 as calibrated
    let root = tmp("exact-dgp");
    let out = run(&[
        "synth",
        "marginal-flaw",
        "--n",
        "2000",
        "--seed",
        "0",
        "--out",
        root.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let report = root.join("report.json");
    let out = run(&[
        "cce",
        "--ground-truth",
        root.join("dataset.ndjson").to_str().unwrap(),
        "--predictions",
        root.join("model_congruent.ndjson").to_str().unwrap(),
        "--seed",
        "0",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let parsed = read_json(&report);
    assert!(parsed["mean"].as_f64().unwrap() < 0.05);
    assert_eq!(parsed["values"].as_array().unwrap().len(), 2000);
}

#[test]
fn label_free_queries_and_downsample() {
    let root = tmp("queries");
    let out = run(&[
        "synth",
        "marginal-flaw",
        "--n",
        "300",
        "--seed",
        "2",
        "--out",
        root.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let queries = root.join("queries.ndjson");
    fs::write(&queries, "{\"x\":[5.0]}\n{\"x\":[-4.0]}\n{\"x\":[0.25]}\n").unwrap();
    let report = root.join("report.json");
    let out = run(&[
        "cce",
        "--ground-truth",
        root.join("dataset.ndjson").to_str().unwrap(),
        "--predictions",
        root.join("model_marginal.ndjson").to_str().unwrap(),
        "--queries",
        queries.to_str().unwrap(),
        "--downsample",
        "150",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let parsed = read_json(&report);
    let values = parsed["values"].as_array().unwrap();
    assert_eq!(values.len(), 3);
    assert!(values.iter().all(|v| v.as_f64().unwrap().is_finite()));

    // k beyond the dataset size is a data error
    let out = run(&[
        "cce",
        "--ground-truth",
        root.join("dataset.ndjson").to_str().unwrap(),
        "--self-check",
        "--downsample",
        "5000",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn calibrate_reports_and_reliability_rows() {
    let root = tmp("calibrate");
    let out = run(&[
        "synth",
        "marginal-flaw",
        "--n",
        "2000",
        "--seed",
        "0",
        "--out",
        root.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let out = run(&[
        "calibrate",
        "--predictions",
        root.join("model_congruent.ndjson").to_str().unwrap(),
        "--labels",
        root.join("dataset.ndjson").to_str().unwrap(),
        "--out",
        root.join("cal").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let report = read_json(&root.join("cal/calibration.json"));
    assert!(report["ece"].as_f64().unwrap() < 0.02, "perfectly specified gaussian");
    let csv = fs::read_to_string(root.join("cal/reliability.csv")).unwrap();
    assert_eq!(csv.lines().count(), 100, "header plus exactly q rows");

    // a zero-density label must flag the mean NLL, not crash
    fs::write(root.join("p.ndjson"), "{\"x\":[0.0],\"family\":\"poisson\",\"params\":[3.0]}\n")
        .unwrap();
    fs::write(root.join("l.ndjson"), "{\"x\":[0.0],\"y\":5000}\n").unwrap();
    let out = run(&[
        "calibrate",
        "--predictions",
        root.join("p.ndjson").to_str().unwrap(),
        "--labels",
        root.join("l.ndjson").to_str().unwrap(),
        "--out",
        root.join("cal2").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let text = fs::read_to_string(root.join("cal2/calibration.json")).unwrap();
    assert!(text.contains("\"mean_nll\":\"inf\""), "{text}");
}

#[test]
fn degenerate_outputs_are_a_numerical_failure() {
    let root = tmp("degenerate");
    let ds = root.join("d.ndjson");
    let rows: String = (0..20).map(|i| format!("{{\"x\":[{i}.0],\"y\":1.0}}\n")).collect();
    fs::write(&ds, rows).unwrap();
    let out = run(&[
        "cce",
        "--ground-truth",
        ds.to_str().unwrap(),
        "--self-check",
        "--out",
        root.join("r.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr_of(&out));
}

#[test]
fn thread_count_does_not_change_results() {
    // n above the parallel threshold so Gram construction actually fans out
    let root = tmp("thread-det");
    let out = run(&[
        "synth",
        "marginal-flaw",
        "--n",
        "600",
        "--seed",
        "4",
        "--out",
        root.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let mut reports = Vec::new();
    for cap in ["1", "4"] {
        let report = root.join(format!("report_{cap}.json"));
        let out = bin()
            .env("CONGRUENCE_THREADS", cap)
            .args([
                "cce",
                "--ground-truth",
                root.join("dataset.ndjson").to_str().unwrap(),
                "--predictions",
                root.join("model_congruent.ndjson").to_str().unwrap(),
                "--seed",
                "0",
                "--out",
                report.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", stderr_of(&out));
        reports.push(fs::read(&report).unwrap());
    }
    assert_eq!(reports[0], reports[1], "results depend on the thread cap");
}

#[test]
fn thread_cap_env_var() {
    let root = tmp("threads");
    let out = bin()
        .env("CONGRUENCE_THREADS", "not-a-number")
        .args(["synth", "reject", "--n", "50", "--out", root.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("CONGRUENCE_THREADS"));

    for cap in ["0", "2"] {
        let out = bin()
            .env("CONGRUENCE_THREADS", cap)
            .args(["synth", "reject", "--n", "50", "--out", root.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", stderr_of(&out));
    }
}

#[test]
fn prediction_files_round_trip_through_cce() {
    // four-family tables parse back and evaluate
    let root = tmp("roundtrip");
    let out = run(&[
        "synth",
        "four-family",
        "--n",
        "120",
        "--seed",
        "5",
        "--out",
        root.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    for fam in ["gaussian", "poisson", "negbinom", "doublepoisson"] {
        let report = root.join(format!("report_{fam}.json"));
        let out = run(&[
            "cce",
            "--ground-truth",
            root.join(format!("dataset_{fam}.ndjson")).to_str().unwrap(),
            "--predictions",
            root.join(format!("model_{fam}.ndjson")).to_str().unwrap(),
            "--kernel-x",
            "rbf",
            "--gamma-x",
            "0.5",
            "--out",
            report.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{fam}: {}", stderr_of(&out));
        assert!(read_json(&report)["mean"].as_f64().unwrap().is_finite());
    }
}
