//! End-to-end commands: ingest match directories into a pass store,
//! analyze a pass store, score it against a frozen model, and generate
//! synthetic matches.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::aggregation::{
    duo_delta_tiv, player_profiles, project_2d, team_style_points, tiv_heatmap, GridSpec, HeatmapGrid, HeatmapMode,
    Projection,
};
use crate::clustering::{assign, fit_kmeans, label_clusters, ArchetypeModel, KMeansConfig};
use crate::error::{ConfigError, Error, Result};
use crate::ingest::{discover_matches, ingest_match, IngestConfig, MatchReport, TimelineEvent, EVENTS_FILE, META_FILE, TRACKING_FILE};
use crate::metrics::{compute_all, DensityParams};
use crate::model::{Archetype, MatchId, PassEvent, Pitch, RawMetrics, StructuralFeatures, Weights};
use crate::normalize::{fit_norm_stats, normalize_all, NormStats};
use crate::outcomes::{
    annotate_outcomes, outcome_rates_by_archetype, outcome_rates_by_tiv_quantile, OutcomeConfig, OutcomeRates,
    OutcomeRecord,
};

pub const PASSES_FILE: &str = "passes.jsonl";
pub const TIMELINE_FILE: &str = "timeline.jsonl";
pub const INGEST_REPORT_FILE: &str = "ingest_report.json";
pub const MODEL_FILE: &str = "model.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const FEATURES_FILE: &str = "features.csv";

const MODEL_FORMAT: &str = "pass-structure-model/1";

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub density: DensityParams,
    pub weights: Weights,
    pub kmeans: KMeansConfig,
    pub outcomes: OutcomeConfig,
    pub grid: GridSpec,
    /// Number of equal-population TIV bins in the outcome table.
    pub quantiles: usize,
    pub min_passes: usize,
    pub min_duo_count: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            density: DensityParams::default(),
            weights: Weights::EQUAL,
            kmeans: KMeansConfig::default(),
            outcomes: OutcomeConfig::default(),
            grid: GridSpec::default(),
            quantiles: 5,
            min_passes: 30,
            min_duo_count: 5,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.density.validate()?;
        self.kmeans.validate()?;
        if self.kmeans.k != 4 {
            return Err(ConfigError::invalid(
                "k",
                format!("archetype labeling needs exactly 4 clusters, got {}", self.kmeans.k),
            ));
        }
        self.outcomes.validate()?;
        self.grid.validate()?;
        if self.quantiles < 2 {
            return Err(ConfigError::invalid("quantiles", "must be >= 2"));
        }
        Ok(())
    }
}

/// Everything a config file may set; missing keys take their defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub ingest: IngestConfig,
    pub analysis: AnalysisConfig,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(Error::MissingFile(path.to_owned())),
            Err(e) => return Err(Error::io(path, e)),
        };
        serde_json::from_str(&text).map_err(|e| Error::InvalidInput {
            path: path.to_owned(),
            message: e.to_string(),
        })
    }
}

/// Runs `f` on a pool of `jobs` threads, or on the global pool.
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(ConfigError::invalid("jobs", "must be >= 1").into()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::from(ConfigError::invalid("jobs", e.to_string())))?;
            Ok(pool.install(f))
        }
    }
}

// ---------------------------------------------------------------------------
// File helpers
// ---------------------------------------------------------------------------

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn write_jsonl<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in rows {
        serde_json::to_writer(&mut w, &r)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_owned()));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(line).map_err(|e| Error::Parse {
            path: path.to_owned(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_owned()));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidInput {
        path: path.to_owned(),
        message: e.to_string(),
    })
}

/// Small CSV table kept as strings so every writer formats numbers alike.
struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn rate_cells(r: Option<&OutcomeRates>) -> Vec<String> {
    match r {
        Some(r) => vec![
            num(r.final_third_entry),
            num(r.box_entry),
            num(r.shot_in_window),
            num(r.goal_in_window),
        ],
        None => vec![String::new(); 4],
    }
}

fn archetype_key(a: Archetype) -> &'static str {
    match a {
        Archetype::Circulatory => "circulatory",
        Archetype::Destabilising => "destabilising",
        Archetype::LineBreaking => "line_breaking",
        Archetype::SpaceExpanding => "space_expanding",
    }
}

// ---------------------------------------------------------------------------
// Ingest
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestTotals {
    pub matches: usize,
    pub events: usize,
    pub frames: usize,
    pub pass_events: usize,
    pub passes: usize,
    pub dropped: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub config: IngestConfig,
    /// SHA-256 of every input file, keyed by path relative to the input root.
    pub input_sha256: BTreeMap<String, String>,
    pub totals: IngestTotals,
    pub matches: Vec<MatchReport>,
}

/// Passes, timelines and per-match reports produced by ingest.
#[derive(Debug, Clone)]
pub struct PassStore {
    pub passes: Vec<PassEvent>,
    pub timeline: Vec<TimelineEvent>,
    pub report: IngestReport,
}

impl PassStore {
    pub fn pitches(&self) -> BTreeMap<MatchId, Pitch> {
        self.report
            .matches
            .iter()
            .map(|m| (m.match_id.clone(), m.pitch))
            .collect()
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let report: IngestReport = read_json(&dir.join(INGEST_REPORT_FILE))?;
        Ok(Self {
            passes: read_jsonl(&dir.join(PASSES_FILE))?,
            timeline: read_jsonl(&dir.join(TIMELINE_FILE))?,
            report,
        })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_jsonl(&dir.join(PASSES_FILE), &self.passes)?;
        write_jsonl(&dir.join(TIMELINE_FILE), &self.timeline)?;
        write_json(&dir.join(INGEST_REPORT_FILE), &self.report)
    }
}

/// Ingests one match directory or a directory of match directories.
pub fn ingest_dir(input: &Path, cfg: &IngestConfig) -> Result<PassStore> {
    cfg.validate()?;
    if !input.is_dir() {
        return Err(Error::MissingFile(input.to_owned()));
    }
    let dirs = discover_matches(input)?;
    if dirs.is_empty() {
        return Err(Error::InvalidInput {
            path: input.to_owned(),
            message: format!("no match directories (containing {META_FILE}) found"),
        });
    }
    let extractions: Vec<_> = dirs
        .par_iter()
        .map(|d| ingest_match(d, cfg))
        .collect::<Result<Vec<_>>>()?;

    let mut input_sha256 = BTreeMap::new();
    for d in &dirs {
        for f in [META_FILE, EVENTS_FILE, TRACKING_FILE] {
            let path = d.join(f);
            let rel = path.strip_prefix(input).unwrap_or(&path);
            let key = if rel.as_os_str().is_empty() { f.into() } else { rel.to_string_lossy().replace('\\', "/") };
            input_sha256.insert(key, sha256_file(&path)?);
        }
    }

    let mut totals = IngestTotals {
        matches: extractions.len(),
        ..Default::default()
    };
    let mut passes = Vec::new();
    let mut timeline = Vec::new();
    let mut matches = Vec::new();
    let mut seen = BTreeMap::new();
    for (x, d) in extractions.into_iter().zip(&dirs) {
        if let Some(prev) = seen.insert(x.report.match_id.clone(), d.clone()) {
            return Err(Error::InvalidInput {
                path: d.clone(),
                message: format!("match id {} already used by {}", x.report.match_id, prev.display()),
            });
        }
        totals.events += x.report.events;
        totals.frames += x.report.frames;
        totals.pass_events += x.report.pass_events;
        totals.passes += x.report.passes;
        for (k, v) in &x.report.dropped {
            *totals.dropped.entry(k.clone()).or_default() += v;
        }
        log::info!(
            "{}: {} of {} pass events kept",
            x.report.match_id,
            x.report.passes,
            x.report.pass_events
        );
        passes.extend(x.passes);
        timeline.extend(x.timeline);
        matches.push(x.report);
    }
    Ok(PassStore {
        passes,
        timeline,
        report: IngestReport {
            config: *cfg,
            input_sha256,
            totals,
            matches,
        },
    })
}

pub fn run_ingest(input: &Path, out: &Path, cfg: &IngestConfig) -> Result<IngestTotals> {
    let store = ingest_dir(input, cfg)?;
    store.write(out)?;
    Ok(store.report.totals)
}

// ---------------------------------------------------------------------------
// Analyze
// ---------------------------------------------------------------------------

/// Everything needed to score new passes exactly as the fitted corpus was.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrozenModel {
    pub format: String,
    pub density: DensityParams,
    pub weights: Weights,
    pub norm: NormStats,
    pub kmeans: KMeansConfig,
    pub model: ArchetypeModel,
}

impl FrozenModel {
    pub fn load(path: &Path) -> Result<Self> {
        let m: FrozenModel = read_json(path)?;
        if m.format != MODEL_FORMAT {
            return Err(Error::ModelMismatch(format!(
                "unsupported model format {:?}, expected {MODEL_FORMAT:?}",
                m.format
            )));
        }
        if m.model.labels.is_none() || m.model.k() != 4 {
            return Err(Error::ModelMismatch("model must carry four labeled centroids".into()));
        }
        Ok(m)
    }

    /// Features and archetype of each pass under the frozen parameters.
    pub fn score(&self, passes: &[PassEvent]) -> (Vec<RawMetrics>, Vec<StructuralFeatures>, Vec<(usize, Archetype)>) {
        let raw = compute_all(passes, &self.density);
        let features = normalize_all(&raw, &self.norm, &self.weights);
        let assigned = features
            .iter()
            .map(|f| {
                let (c, a) = assign(&f.z(), &self.model);
                (c, a.expect("labeled model"))
            })
            .collect();
        (raw, features, assigned)
    }
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub passes: Vec<PassEvent>,
    pub features: Vec<StructuralFeatures>,
    pub clusters: Vec<usize>,
    pub archetypes: Vec<Archetype>,
    pub outcomes: Vec<OutcomeRecord>,
    pub frozen: FrozenModel,
    pub projection: Projection,
}

/// Outcome flags for every pass, each evaluated on its own match timeline.
pub fn annotate_store(store: &PassStore, cfg: &OutcomeConfig) -> Result<Vec<OutcomeRecord>> {
    let pitches = store.pitches();
    let mut timelines: BTreeMap<&MatchId, Vec<TimelineEvent>> = BTreeMap::new();
    for e in &store.timeline {
        timelines.entry(&e.match_id).or_default().push(e.clone());
    }
    for t in timelines.values_mut() {
        t.sort_by(|a, b| (a.period, a.t).partial_cmp(&(b.period, b.t)).expect("finite times"));
    }
    let empty = Vec::new();
    store
        .passes
        .iter()
        .map(|p| {
            let pitch = pitches.get(&p.match_id).ok_or_else(|| Error::InvalidInput {
                path: PathBuf::from(INGEST_REPORT_FILE),
                message: format!("no report for match {}", p.match_id),
            })?;
            let timeline = timelines.get(&p.match_id).unwrap_or(&empty);
            Ok(annotate_outcomes(std::slice::from_ref(p), timeline, pitch, cfg).remove(0))
        })
        .collect()
}

/// Fits normalization and clustering on the whole store and derives all
/// per-pass results.
pub fn analyze(store: &PassStore, cfg: &AnalysisConfig) -> Result<Analysis> {
    cfg.validate()?;
    let passes = store.passes.clone();
    let raw = compute_all(&passes, &cfg.density);
    let norm = fit_norm_stats(&raw)?;
    let features = normalize_all(&raw, &norm, &cfg.weights);
    let z: Vec<[f64; 3]> = features.iter().map(StructuralFeatures::z).collect();
    let fit = fit_kmeans(&z, &cfg.kmeans)?;
    let model = label_clusters(fit.model)?;
    let (clusters, archetypes): (Vec<usize>, Vec<Archetype>) = z
        .iter()
        .map(|v| {
            let (c, a) = assign(v, &model);
            (c, a.expect("labeled model"))
        })
        .unzip();
    let outcomes = annotate_store(store, &cfg.outcomes)?;
    let projection = project_2d(&z)?;
    Ok(Analysis {
        passes,
        features,
        clusters,
        archetypes,
        outcomes,
        frozen: FrozenModel {
            format: MODEL_FORMAT.into(),
            density: cfg.density,
            weights: cfg.weights,
            norm,
            kmeans: cfg.kmeans,
            model,
        },
        projection,
    })
}

fn features_table(passes: &[PassEvent], features: &[StructuralFeatures], assigned: &[(usize, Archetype)]) -> Table {
    let mut t = Table::new(&[
        "pass_id", "match_id", "team_id", "passer_id", "receiver_id", "period", "t", "start_x", "start_y", "end_x",
        "end_y", "n_defenders", "lbs", "sgm", "sdi", "z_lbs", "z_sgm", "z_sdi", "tiv", "cluster", "archetype",
        "degenerate",
    ]);
    for ((p, f), (c, a)) in passes.iter().zip(features).zip(assigned) {
        t.push(vec![
            p.pass_id.clone(),
            p.match_id.to_string(),
            p.team_id.to_string(),
            p.passer_id.to_string(),
            p.receiver_id.to_string(),
            p.period.to_string(),
            num(p.t),
            num(p.start.x),
            num(p.start.y),
            num(p.end.x),
            num(p.end.y),
            p.snapshot.len().to_string(),
            f.lbs.to_string(),
            num(f.sgm),
            num(f.sdi),
            num(f.z_lbs),
            num(f.z_sgm),
            num(f.z_sdi),
            num(f.tiv),
            c.to_string(),
            archetype_key(*a).into(),
            p.is_degenerate().to_string(),
        ]);
    }
    t
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

fn population_sd(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
}

fn heatmap_table(grid: &HeatmapGrid) -> Table {
    let mut t = Table::new(&["row", "col", "count", "mean_tiv", "reliable"]);
    for row in 0..grid.spec.ny {
        for col in 0..grid.spec.nx {
            let c = grid.cell(row, col);
            t.push(vec![
                row.to_string(),
                col.to_string(),
                c.count.to_string(),
                opt_num(c.mean_tiv()),
                grid.is_reliable(row, col).to_string(),
            ]);
        }
    }
    t
}

const SHARE_COLUMNS: [&str; 4] = [
    "share_circulatory",
    "share_destabilising",
    "share_line_breaking",
    "share_space_expanding",
];

fn with_columns(head: &[&'static str], tail: &[&'static str]) -> Vec<&'static str> {
    head.iter().chain(tail).copied().collect()
}

/// Writes every analysis table. Returns the file names written.
fn write_tables(a: &Analysis, store: &PassStore, cfg: &AnalysisConfig, out: &Path) -> Result<Vec<String>> {
    let mut written = Vec::new();
    let mut emit = |name: &str, table: Table| -> Result<()> {
        table.write(&out.join(name))?;
        written.push(name.to_string());
        Ok(())
    };
    let assigned: Vec<(usize, Archetype)> = a.clusters.iter().copied().zip(a.archetypes.iter().copied()).collect();
    emit(FEATURES_FILE, features_table(&a.passes, &a.features, &assigned))?;

    let n = a.passes.len();
    let members = |arch: Archetype| -> Vec<usize> { (0..n).filter(|&i| a.archetypes[i] == arch).collect() };

    let mut dist = Table::new(&["archetype", "cluster", "n", "share"]);
    let mut metrics = Table::new(&[
        "archetype", "n", "mean_lbs", "mean_sgm", "mean_sdi", "mean_z_lbs", "mean_z_sgm", "mean_z_sdi", "centroid_z_lbs",
        "centroid_z_sgm", "centroid_z_sdi",
    ]);
    let mut by_type = Table::new(&["archetype", "n", "mean_tiv", "median_tiv", "sd_tiv"]);
    for arch in Archetype::ALL {
        let idx = members(arch);
        let cluster = a.frozen.model.cluster_of(arch).expect("four labels");
        let centroid = a.frozen.model.centroids[cluster];
        dist.push(vec![
            archetype_key(arch).into(),
            cluster.to_string(),
            idx.len().to_string(),
            num(idx.len() as f64 / n as f64),
        ]);
        let col = |f: &dyn Fn(&StructuralFeatures) -> f64| -> Vec<f64> { idx.iter().map(|&i| f(&a.features[i])).collect() };
        let m = |f: &dyn Fn(&StructuralFeatures) -> f64| -> String {
            if idx.is_empty() {
                String::new()
            } else {
                num(mean(&col(f)))
            }
        };
        metrics.push(vec![
            archetype_key(arch).into(),
            idx.len().to_string(),
            m(&|f| f64::from(f.lbs)),
            m(&|f| f.sgm),
            m(&|f| f.sdi),
            m(&|f| f.z_lbs),
            m(&|f| f.z_sgm),
            m(&|f| f.z_sdi),
            num(centroid[0]),
            num(centroid[1]),
            num(centroid[2]),
        ]);
        let tiv = col(&|f| f.tiv);
        by_type.push(if tiv.is_empty() {
            vec![archetype_key(arch).into(), "0".into(), String::new(), String::new(), String::new()]
        } else {
            vec![
                archetype_key(arch).into(),
                tiv.len().to_string(),
                num(mean(&tiv)),
                num(median(&tiv)),
                num(population_sd(&tiv)),
            ]
        });
    }
    emit("archetype_distribution.csv", dist)?;
    emit("archetype_metrics.csv", metrics)?;
    emit("tiv_by_type.csv", by_type)?;

    let window = num(cfg.outcomes.window_s);
    let mut per_pass = Table::new(&[
        "pass_id", "archetype", "tiv", "final_third_entry", "box_entry", "shot_in_window", "goal_in_window", "window_s",
    ]);
    for ((o, f), arch) in a.outcomes.iter().zip(&a.features).zip(&a.archetypes) {
        per_pass.push(vec![
            o.pass_id.clone(),
            archetype_key(*arch).into(),
            num(f.tiv),
            o.final_third_entry.to_string(),
            o.box_entry.to_string(),
            o.shot_in_window.to_string(),
            o.goal_in_window.to_string(),
            num(o.window_s),
        ]);
    }
    emit("outcomes.csv", per_pass)?;

    const RATES: [&str; 4] = ["final_third_entry", "box_entry", "shot_in_window", "goal_in_window"];
    let mut by_arch = Table::new(&with_columns(&["archetype", "n"], &with_columns(&RATES, &["window_s"])));
    for row in outcome_rates_by_archetype(&a.outcomes, &a.archetypes) {
        let mut cells = vec![archetype_key(row.archetype).into(), row.n.to_string()];
        cells.extend(rate_cells(row.rates.as_ref()));
        cells.push(window.clone());
        by_arch.push(cells);
    }
    emit("outcomes_by_archetype.csv", by_arch)?;

    let tiv: Vec<f64> = a.features.iter().map(|f| f.tiv).collect();
    let mut by_q = Table::new(&with_columns(
        &["bin", "n", "tiv_min", "tiv_max"],
        &with_columns(&RATES, &["window_s"]),
    ));
    if cfg.quantiles <= n {
        for row in outcome_rates_by_tiv_quantile(&a.outcomes, &tiv, cfg.quantiles)? {
            let mut cells = vec![row.bin.to_string(), row.n.to_string(), num(row.tiv_min), num(row.tiv_max)];
            cells.extend(rate_cells(Some(&row.rates)));
            cells.push(window.clone());
            by_q.push(cells);
        }
    } else {
        log::warn!("{} passes is fewer than {} TIV bins; quantile table left empty", n, cfg.quantiles);
    }
    emit("outcomes_by_tiv_quantile.csv", by_q)?;

    let mut styles = Table::new(&with_columns(
        &["team_id", "n_passes", "x_style", "y_style", "quadrant"],
        &with_columns(&SHARE_COLUMNS, &["shot_prob", "box_entry_prob"]),
    ));
    for s in team_style_points(&a.passes, &a.archetypes, &a.outcomes) {
        let mut cells = vec![
            s.team_id.to_string(),
            s.n_passes.to_string(),
            num(s.x_style),
            num(s.y_style),
            s.quadrant.name().into(),
        ];
        cells.extend(s.shares.iter().map(|v| num(*v)));
        cells.push(num(s.shot_prob));
        cells.push(num(s.box_entry_prob));
        styles.push(cells);
    }
    emit("team_styles.csv", styles)?;

    let pitches = store.pitches();
    let pitch_of = |p: &PassEvent| pitches.get(&p.match_id).copied().unwrap_or_default();
    for (name, mode) in [
        ("heatmap_origin.csv", HeatmapMode::Origin),
        ("heatmap_destination.csv", HeatmapMode::Destination),
    ] {
        emit(name, heatmap_table(&tiv_heatmap(&a.passes, &tiv, mode, cfg.grid, pitch_of)))?;
    }

    let mut players = Table::new(&with_columns(
        &["rank", "player_id", "team_id", "n_passes", "mean_lbs", "mean_sgm", "mean_sdi", "cum_tiv", "mean_tiv"],
        &SHARE_COLUMNS,
    ));
    for (rank, p) in player_profiles(&a.passes, &a.features, &a.archetypes, cfg.min_passes)
        .iter()
        .enumerate()
    {
        let mut cells = vec![
            (rank + 1).to_string(),
            p.player_id.to_string(),
            p.team_id.to_string(),
            p.n_passes.to_string(),
            num(p.mean_lbs),
            num(p.mean_sgm),
            num(p.mean_sdi),
            num(p.cum_tiv),
            num(p.mean_tiv),
        ];
        cells.extend(p.archetype_shares.iter().map(|v| num(*v)));
        players.push(cells);
    }
    emit("players.csv", players)?;

    let mut duos = Table::new(&with_columns(
        &["passer_id", "receiver_id", "n", "mean_tiv_pair", "passer_baseline_mean", "delta_tiv"],
        &RATES,
    ));
    for d in duo_delta_tiv(&a.passes, &tiv, &a.outcomes, cfg.min_duo_count) {
        let mut cells = vec![
            d.passer_id.to_string(),
            d.receiver_id.to_string(),
            d.n.to_string(),
            num(d.mean_tiv_pair),
            num(d.passer_baseline_mean),
            num(d.delta_tiv),
        ];
        cells.extend(rate_cells(Some(&d.outcome_probs)));
        duos.push(cells);
    }
    emit("duos.csv", duos)?;

    let mut proj = Table::new(&["pass_id", "archetype", "pc1", "pc2"]);
    for ((p, arch), c) in a.passes.iter().zip(&a.archetypes).zip(&a.projection.coords) {
        proj.push(vec![p.pass_id.clone(), archetype_key(*arch).into(), num(c[0]), num(c[1])]);
    }
    emit("projection.csv", proj)?;
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub created_at: String,
    pub n_passes: usize,
    pub config: serde_json::Value,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    #[serde(default)]
    pub details: serde_json::Value,
}

fn write_manifest(
    out: &Path,
    command: &str,
    n_passes: usize,
    config: serde_json::Value,
    inputs: BTreeMap<String, String>,
    outputs: &[String],
    details: serde_json::Value,
) -> Result<()> {
    let mut hashes = BTreeMap::new();
    for name in outputs {
        hashes.insert(name.clone(), sha256_file(&out.join(name))?);
    }
    write_json(
        &out.join(MANIFEST_FILE),
        &Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            n_passes,
            config,
            inputs,
            outputs: hashes,
            details,
        },
    )
}

fn store_hashes(dir: &Path) -> Result<BTreeMap<String, String>> {
    [PASSES_FILE, TIMELINE_FILE, INGEST_REPORT_FILE]
        .iter()
        .map(|f| Ok((f.to_string(), sha256_file(&dir.join(f))?)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyzeSummary {
    pub n_passes: usize,
    pub counts: BTreeMap<Archetype, usize>,
    pub inertia: f64,
    pub explained_variance_ratio: [f64; 2],
}

/// Analyzes the pass store in `store_dir` and writes all tables, the frozen
/// model and a manifest to `out`.
pub fn run_analyze(store_dir: &Path, out: &Path, cfg: &AnalysisConfig) -> Result<AnalyzeSummary> {
    cfg.validate()?;
    let store = PassStore::load(store_dir)?;
    let a = analyze(&store, cfg)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut written = write_tables(&a, &store, cfg, out)?;
    write_json(&out.join(MODEL_FILE), &a.frozen)?;
    written.push(MODEL_FILE.into());
    write_manifest(
        out,
        "analyze",
        a.passes.len(),
        serde_json::to_value(cfg)?,
        store_hashes(store_dir)?,
        &written,
        serde_json::json!({
            "projection": {
                "mean": a.projection.mean,
                "components": a.projection.components,
                "explained_variance_ratio": a.projection.explained_variance_ratio,
            },
            "kmeans": {
                "inertia": a.frozen.model.inertia,
                "iterations": a.frozen.model.iterations,
                "converged": a.frozen.model.converged,
            },
        }),
    )?;
    let mut counts = BTreeMap::new();
    for arch in &a.archetypes {
        *counts.entry(*arch).or_default() += 1;
    }
    Ok(AnalyzeSummary {
        n_passes: a.passes.len(),
        counts,
        inertia: a.frozen.model.inertia,
        explained_variance_ratio: a.projection.explained_variance_ratio,
    })
}

// ---------------------------------------------------------------------------
// Score
// ---------------------------------------------------------------------------

/// Scores a pass store against a frozen model. `sigma`, when given, must
/// match the model's bandwidth.
pub fn run_score(store_dir: &Path, model_path: &Path, out: &Path, sigma: Option<f64>) -> Result<usize> {
    let frozen = FrozenModel::load(model_path)?;
    if let Some(s) = sigma {
        if s != frozen.density.sigma {
            return Err(Error::ModelMismatch(format!(
                "requested sigma {s} but the model was fitted with sigma {}",
                frozen.density.sigma
            )));
        }
    }
    let store = PassStore::load(store_dir)?;
    let (_, features, assigned) = frozen.score(&store.passes);
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    features_table(&store.passes, &features, &assigned).write(&out.join(FEATURES_FILE))?;
    let mut inputs = store_hashes(store_dir)?;
    inputs.insert(MODEL_FILE.into(), sha256_file(model_path)?);
    write_manifest(
        out,
        "score",
        store.passes.len(),
        serde_json::to_value(frozen.density)?,
        inputs,
        &[FEATURES_FILE.into()],
        serde_json::Value::Null,
    )?;
    Ok(store.passes.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_partial_files() {
        let c: PipelineConfig = serde_json::from_str(r#"{"analysis": {"density": {"sigma": 12.0}}}"#).unwrap();
        assert_eq!(c.analysis.density.sigma, 12.0);
        assert_eq!(c.analysis.density.rho_floor, 1e-6);
        assert_eq!(c.analysis.kmeans.k, 4);
        assert_eq!(c.ingest.smoothing_window, 7);
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn k_other_than_four_rejected() {
        let mut c = AnalysisConfig::default();
        c.kmeans.k = 5;
        assert_eq!(c.validate().unwrap_err().field, "k");
    }

    #[test]
    fn summary_statistics() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(population_sd(&[1.0, 3.0]), 1.0);
    }

    #[test]
    fn jobs_pool() {
        assert_eq!(with_jobs(Some(2), rayon::current_num_threads).unwrap(), 2);
        assert!(with_jobs(Some(0), || ()).is_err());
    }
}
