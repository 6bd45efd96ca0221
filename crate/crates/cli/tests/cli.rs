use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn passtruct(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_passtruct"))
        .args(args)
        .output()
        .expect("run passtruct")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(dir: &Path) {
    let out = passtruct(&["synth", "-o", p(dir), "--matches", "2", "--passes-per-match", "120", "--seed", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn full_run_and_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    synth(&root.join("raw"));
    let out = passtruct(&["ingest", p(&root.join("raw")), "-o", p(&root.join("store"))]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("240 of"));

    for (dir, jobs) in [("a", "1"), ("b", "3")] {
        let out = passtruct(&[
            "analyze",
            p(&root.join("store")),
            "-o",
            p(&root.join(dir)),
            "--grid",
            "6x4",
            "--window",
            "8",
            "--jobs",
            jobs,
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for entry in fs::read_dir(root.join("a")).unwrap() {
        let name = entry.unwrap().file_name();
        if name == "manifest.json" {
            continue;
        }
        assert_eq!(
            fs::read(root.join("a").join(&name)).unwrap(),
            fs::read(root.join("b").join(&name)).unwrap(),
            "{name:?}"
        );
    }
    let heat = fs::read_to_string(root.join("a/heatmap_origin.csv")).unwrap();
    assert_eq!(heat.lines().count(), 1 + 24);
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(root.join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["outcomes"]["window_s"], 8.0);
    assert_eq!(manifest["config"]["grid"]["nx"], 6);
    assert!(manifest["inputs"]["passes.jsonl"].is_string());
    assert!(manifest["outputs"]["features.csv"].is_string());

    let out = passtruct(&[
        "score",
        p(&root.join("store")),
        "--model",
        p(&root.join("a/model.json")),
        "-o",
        p(&root.join("scored")),
    ]);
    assert!(out.status.success());
    assert_eq!(
        fs::read(root.join("a/features.csv")).unwrap(),
        fs::read(root.join("scored/features.csv")).unwrap()
    );
}

#[test]
fn missing_tracking_file_exits_2_and_names_it() {
    let tmp = tempfile::tempdir().unwrap();
    synth(&tmp.path().join("raw"));
    fs::remove_file(tmp.path().join("raw/synth_001/tracking.jsonl")).unwrap();
    let out = passtruct(&["ingest", p(&tmp.path().join("raw")), "-o", p(&tmp.path().join("store"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tracking.jsonl"));
}

#[test]
fn invalid_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    synth(&root.join("raw"));
    assert!(passtruct(&["ingest", p(&root.join("raw")), "-o", p(&root.join("store"))]).status.success());

    let out = passtruct(&["analyze", p(&root.join("store")), "-o", p(&root.join("res")), "--k", "5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!root.join("res").exists());

    let out = passtruct(&["analyze", p(&root.join("store")), "-o", p(&root.join("res")), "--sigma=-1"]);
    assert_eq!(out.status.code(), Some(2));

    fs::write(root.join("bad.json"), r#"{"analysis": {"weights": [0.5, 0.5, 0.5]}}"#).unwrap();
    let out = passtruct(&[
        "analyze",
        p(&root.join("store")),
        "-o",
        p(&root.join("res")),
        "--config",
        p(&root.join("bad.json")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sigma_mismatch_on_score_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    synth(&root.join("raw"));
    assert!(passtruct(&["ingest", p(&root.join("raw")), "-o", p(&root.join("store"))]).status.success());
    assert!(passtruct(&["analyze", p(&root.join("store")), "-o", p(&root.join("res"))]).status.success());
    let out = passtruct(&[
        "score",
        p(&root.join("store")),
        "--model",
        p(&root.join("res/model.json")),
        "-o",
        p(&root.join("scored")),
        "--sigma",
        "12",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sigma"));
}

#[test]
fn infeasible_synth_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("s.json"), r#"{"defenders": 2, "pass_mix": {"LineBreaking": 1.0}}"#).unwrap();
    let out = passtruct(&["synth", "-o", p(&tmp.path().join("o")), "--scenario", p(&tmp.path().join("s.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("infeasible"));
}
