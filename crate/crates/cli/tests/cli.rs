use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn toy_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/toy")
}

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_datasetlens"));
    for (k, _) in std::env::vars() {
        if k.starts_with("DATASETLENS_") {
            cmd.env_remove(k);
        }
    }
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn text(out: &Output) -> (String, String) {
    (
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn config() -> String {
    toy_dir().join("config.toml").display().to_string()
}

fn read_report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn metric<'a>(report: &'a Value, section: &str, id: &str) -> &'a Value {
    report["sections"][section]["metrics"]
        .as_array()
        .unwrap()
        .iter()
        .find(|m| m["id"] == id)
        .unwrap()
}

#[test]
fn analyze_writes_json_and_html() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["analyze", "--config", &config(), "--out", tmp.path().to_str().unwrap()]);
    let (stdout, stderr) = text(&out);
    assert!(out.status.success(), "{stderr}");
    assert!(stdout.contains("report.json"));
    let report = read_report(tmp.path());
    for section in ["object", "gender", "geo", "insight"] {
        assert_eq!(report["sections"][section]["status"], "computed", "{section}");
    }
    assert_eq!(report["dataset"]["n_images"], 52);
    let html = fs::read_to_string(tmp.path().join("report.html")).unwrap();
    assert!(html.contains("<svg"));
}

#[test]
fn missing_feature_file_warns_and_skips() {
    let tmp = tempfile::tempdir().unwrap();
    let dataset = toy_dir().join("dataset.jsonl");
    let out = run(&[
        "analyze",
        "--dataset",
        dataset.to_str().unwrap(),
        "--features",
        "/nonexistent/features.jsonl",
        "--out",
        tmp.path().to_str().unwrap(),
        "--no-html",
    ]);
    let (_, stderr) = text(&out);
    assert!(out.status.success(), "{stderr}");
    assert!(stderr.contains("warning:"), "{stderr}");
    assert!(!tmp.path().join("report.html").exists());
    let report = read_report(tmp.path());
    let m = metric(&report, "object", "appearance_diversity");
    assert_eq!(m["status"], "skipped");
    assert_eq!(m["missing"], serde_json::json!(["instance_embeddings"]));
    assert_eq!(metric(&report, "object", "object_counts")["status"], "computed");
    assert_eq!(report["inputs"]["features"][0]["attached"], false);
}

#[test]
fn malformed_dataset_names_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.jsonl");
    fs::write(&path, "{\"kind\":\"image\",\"image_id\":\"a\",\"width\":4,\"height\":4}\n{oops\n").unwrap();
    let out = run(&["analyze", "--dataset", path.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    let (_, stderr) = text(&out);
    assert!(!out.status.success());
    assert!(stderr.contains("bad.jsonl:2"), "{stderr}");
}

#[test]
fn recommend_ranks_and_reports_errors() {
    let out = run(&["recommend", "--config", &config(), "--target", "dog", "--outcome", "size:XS,S", "--json"]);
    let (stdout, stderr) = text(&out);
    assert!(out.status.success(), "{stderr}");
    let v: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["target"], "dog");
    assert!(!v["recommendations"].as_array().unwrap().is_empty());

    let out = run(&["recommend", "--config", &config(), "--target", "zebra", "--outcome", "size:XS"]);
    let (_, stderr) = text(&out);
    assert!(!out.status.success());
    assert!(stderr.contains("zebra"), "{stderr}");

    let out = run(&["recommend", "--config", &config(), "--target", "dog", "--outcome", "colour:red"]);
    assert!(!out.status.success());
}

#[test]
fn recommend_without_candidates_prints_notice() {
    let out = run(&[
        "recommend",
        "--config",
        &config(),
        "--target",
        "dog",
        "--outcome",
        "size:XS",
        "--min-support",
        "9999",
    ]);
    let (stdout, _) = text(&out);
    assert!(out.status.success());
    assert!(stdout.starts_with("no candidates"), "{stdout}");
}

#[test]
fn env_and_set_overrides_reach_the_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["analyze", "--config", &config(), "--no-html", "--set", "params.object.duplicate_iou=0.5"])
        .env("DATASETLENS_OUT", tmp.path())
        .env("DATASETLENS_PARAMS__INSIGHT__MIN_SUPPORT", "4")
        .env("DATASETLENS_SEED", "77")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", text(&out).1);
    let report = read_report(tmp.path());
    assert_eq!(report["config"]["params"]["insight"]["min_support"], 4);
    assert_eq!(report["config"]["params"]["object"]["duplicate_iou"], 0.5);
    assert_eq!(report["config"]["params"]["seed"], 77);

    let out = run(&["analyze", "--config", &config(), "--set", "params.object.no_such_key=1"]);
    assert!(!out.status.success());
}

#[test]
fn ingest_round_trips_and_validate_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let copy = tmp.path().join("copy.jsonl");
    let dataset = toy_dir().join("dataset.jsonl");
    let out = run(&["ingest", "--dataset", dataset.to_str().unwrap(), "--out", copy.to_str().unwrap()]);
    assert!(out.status.success(), "{}", text(&out).1);
    let again = tmp.path().join("again.jsonl");
    let out = run(&["ingest", "--dataset", copy.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(fs::read(&copy).unwrap(), fs::read(&again).unwrap());

    let out = run(&["validate", "--dataset", dataset.to_str().unwrap(), "--json"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&text(&out).0).unwrap();
    assert!(v.as_array().unwrap().iter().any(|x| x["kind"] == "bbox-out-of-bounds"));

    let out = run(&["validate", "--dataset", dataset.to_str().unwrap(), "--strict"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tradeoff_prints_points() {
    let out = run(&["tradeoff", "--config", &config(), "--target", "person", "--json"]);
    let (stdout, stderr) = text(&out);
    assert!(out.status.success(), "{stderr}");
    let v: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["target"], "person");
}
