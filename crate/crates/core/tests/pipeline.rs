use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use pass_structure::ingest::IngestConfig;
use pass_structure::pipeline::{self, AnalysisConfig, FrozenModel, PassStore, FEATURES_FILE, MODEL_FILE};
use pass_structure::synthetic::{self, read_ground_truth, ScenarioSpec, GROUND_TRUTH_FILE};
use pass_structure::{Archetype, Error};

fn mix(c: f64, d: f64, l: f64, s: f64) -> BTreeMap<Archetype, f64> {
    Archetype::ALL.into_iter().zip([c, d, l, s]).collect()
}

fn small_spec() -> ScenarioSpec {
    ScenarioSpec {
        seed: 9,
        n_matches: 3,
        passes_per_match: 150,
        noise_sd: 0.05,
        pass_mix: mix(0.4, 0.3, 0.2, 0.1),
        ..Default::default()
    }
}

fn read_csv(path: &Path) -> Vec<BTreeMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let headers = r.headers().unwrap().clone();
    r.records()
        .map(|rec| {
            headers
                .iter()
                .zip(rec.unwrap().iter())
                .map(|(h, v)| (h.to_string(), v.to_string()))
                .collect()
        })
        .collect()
}

#[test]
fn ingest_keeps_every_generated_open_play_pass() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = small_spec();
    let summary = synthetic::generate(&spec, &tmp.path().join("raw")).unwrap();
    let totals = pipeline::run_ingest(&tmp.path().join("raw"), &tmp.path().join("store"), &IngestConfig::default()).unwrap();
    assert_eq!(totals.matches, 3);
    assert_eq!(totals.passes, summary.open_play_passes);
    assert!(totals.dropped["set_piece"] > 0);
    assert!(totals.dropped["unsuccessful"] > 0);
}

#[test]
fn synth_output_is_byte_identical_per_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = small_spec();
    for run in ["a", "b"] {
        synthetic::generate(&spec, &tmp.path().join(run)).unwrap();
    }
    for m in ["synth_000", "synth_001", "synth_002"] {
        for f in ["meta.json", "events.jsonl", "tracking.jsonl", GROUND_TRUTH_FILE] {
            let a = fs::read(tmp.path().join("a").join(m).join(f)).unwrap();
            let b = fs::read(tmp.path().join("b").join(m).join(f)).unwrap();
            assert!(a == b, "{m}/{f} differs");
        }
    }
}

#[test]
fn analyze_tables_and_score_consistency() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    synthetic::generate(&small_spec(), &root.join("raw")).unwrap();
    pipeline::run_ingest(&root.join("raw"), &root.join("store"), &IngestConfig::default()).unwrap();
    let summary = pipeline::run_analyze(&root.join("store"), &root.join("res"), &AnalysisConfig::default()).unwrap();
    assert_eq!(summary.n_passes, 450);

    let features = read_csv(&root.join("res").join(FEATURES_FILE));
    assert_eq!(features.len(), 450);
    for row in &features {
        let z: f64 = ["z_lbs", "z_sgm", "z_sdi"].iter().map(|k| row[*k].parse::<f64>().unwrap()).sum();
        let tiv: f64 = row["tiv"].parse().unwrap();
        assert!((tiv - z / 3.0).abs() < 1e-12);
    }

    // Generated shares are recovered within two percentage points.
    let dist = read_csv(&root.join("res").join("archetype_distribution.csv"));
    let truth: Vec<_> = (0..3)
        .flat_map(|i| read_ground_truth(&root.join("raw").join(format!("synth_{i:03}")).join(GROUND_TRUTH_FILE)).unwrap())
        .collect();
    for (row, arch) in dist.iter().zip(Archetype::ALL) {
        let planted = truth.iter().filter(|t| t.intent == arch).count() as f64 / truth.len() as f64;
        let share: f64 = row["share"].parse().unwrap();
        assert!((share - planted).abs() <= 0.02, "{arch}: {share} vs {planted}");
    }

    for f in [
        "archetype_metrics.csv",
        "tiv_by_type.csv",
        "outcomes.csv",
        "outcomes_by_archetype.csv",
        "outcomes_by_tiv_quantile.csv",
        "team_styles.csv",
        "heatmap_origin.csv",
        "heatmap_destination.csv",
        "players.csv",
        "duos.csv",
        "projection.csv",
        "manifest.json",
        MODEL_FILE,
    ] {
        assert!(root.join("res").join(f).is_file(), "{f} missing");
    }
    assert_eq!(read_csv(&root.join("res").join("outcomes_by_tiv_quantile.csv")).len(), 5);
    assert_eq!(read_csv(&root.join("res").join("heatmap_origin.csv")).len(), 96);

    // Scoring the training corpus with its own model reproduces analyze.
    pipeline::run_score(&root.join("store"), &root.join("res").join(MODEL_FILE), &root.join("scored"), None).unwrap();
    assert_eq!(
        fs::read(root.join("res").join(FEATURES_FILE)).unwrap(),
        fs::read(root.join("scored").join(FEATURES_FILE)).unwrap()
    );

    let err = pipeline::run_score(&root.join("store"), &root.join("res").join(MODEL_FILE), &root.join("x"), Some(12.0))
        .unwrap_err();
    assert!(matches!(err, Error::ModelMismatch(_)));
    assert!(err.is_input_error());
}

#[test]
fn identical_pass_gets_identical_tiv() {
    let tmp = tempfile::tempdir().unwrap();
    synthetic::generate(&small_spec(), &tmp.path().join("raw")).unwrap();
    let mut store = pipeline::ingest_dir(&tmp.path().join("raw"), &IngestConfig::default()).unwrap();
    let a = pipeline::analyze(&store, &AnalysisConfig::default()).unwrap();
    let mut copy = store.passes[17].clone();
    copy.pass_id = "copy".into();
    store.passes = vec![copy];
    let (_, features, assigned) = a.frozen.score(&store.passes);
    assert_eq!(features[0], a.features[17]);
    assert_eq!(assigned[0], (a.clusters[17], a.archetypes[17]));
}

#[test]
fn frozen_model_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    synthetic::generate(&small_spec(), &root.join("raw")).unwrap();
    pipeline::run_ingest(&root.join("raw"), &root.join("store"), &IngestConfig::default()).unwrap();
    let store = PassStore::load(&root.join("store")).unwrap();
    let a = pipeline::analyze(&store, &AnalysisConfig::default()).unwrap();
    pipeline::run_analyze(&root.join("store"), &root.join("res"), &AnalysisConfig::default()).unwrap();
    let loaded = FrozenModel::load(&root.join("res").join(MODEL_FILE)).unwrap();
    assert_eq!(loaded, a.frozen);
}

#[test]
fn missing_store_file_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let err = PassStore::load(tmp.path()).unwrap_err();
    assert!(matches!(err, Error::MissingFile(_)));
    assert!(err.to_string().contains("ingest_report.json"));
}

#[test]
fn job_count_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    synthetic::generate(&small_spec(), &root.join("raw")).unwrap();
    for jobs in [1, 4] {
        let out = root.join(format!("j{jobs}"));
        pipeline::with_jobs(Some(jobs), || {
            pipeline::run_ingest(&root.join("raw"), &out.join("store"), &IngestConfig::default()).unwrap();
            pipeline::run_analyze(&out.join("store"), &out.join("res"), &AnalysisConfig::default()).unwrap();
        })
        .unwrap();
    }
    for f in [FEATURES_FILE, "players.csv", "projection.csv", MODEL_FILE] {
        assert_eq!(
            fs::read(root.join("j1/res").join(f)).unwrap(),
            fs::read(root.join("j4/res").join(f)).unwrap(),
            "{f}"
        );
    }
}
