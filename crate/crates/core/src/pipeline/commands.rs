//! File-backed pipeline stages. Each stage reads what the previous one wrote
//! under the workspace directory:
//!
//! ```text
//! <out>/manifest.json                     scenario list and driver groups
//! <out>/roster.jsonl                      driver trait profiles
//! <out>/scenarios/<name>.jsonl            scenario logs
//! <out>/ratings/<scenario>/<rater>.jsonl  rating traces
//! <out>/features/<scenario>.jsonl         risk features
//! <out>/cluster/                          model.json, quality.{jsonl,txt}, pca.jsonl
//! <out>/models/                           index.json, <arch>_<group>.json + .history.jsonl + .metrics.json
//! <out>/report/                           results.jsonl, anova.jsonl, auc.{txt,jsonl}, anova.txt, metrics.txt
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::study::{category_name, group_datasets, rate_scenario, synthetic_roster, ScenarioData};
use crate::clustering::{
    encode_and_normalize, load_roster, pca_project, roster_to_string, select_cluster_count, ClusterModel,
    DriverProfile, KMeansOptions, QualityRow,
};
use crate::evaluation::{
    anova_oneway, anova_table, compare_report, confusion, macro_ovr_auc, AnovaRow, RunResult, POOLED_GROUP,
};
use crate::network::{
    history_to_jsonl, load_checkpoint, save_checkpoint, stratified_split, train, Arch, Model, Split, WindowSample,
};
use crate::riskfield::{extract_features_par, load_features, save_features, RiskFeatures};
use crate::scenario::{generate_synthetic, load_scenario, load_trace, save_scenario, save_trace, write_file};
use crate::{Error, Result, NUM_LEVELS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestDriver {
    pub driver_id: String,
    /// Generating rater group (ground truth for the clustering step).
    pub group: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub scenarios: Vec<String>,
    pub drivers: Vec<ManifestDriver>,
}

pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn roster(&self) -> PathBuf {
        self.root.join("roster.jsonl")
    }

    pub fn scenario_dir(&self) -> PathBuf {
        self.root.join("scenarios")
    }

    pub fn scenario(&self, name: &str) -> PathBuf {
        self.scenario_dir().join(format!("{name}.jsonl"))
    }

    pub fn ratings_dir(&self, scenario: &str) -> PathBuf {
        self.root.join("ratings").join(scenario)
    }

    pub fn trace(&self, scenario: &str, rater: &str) -> PathBuf {
        self.ratings_dir(scenario).join(format!("{rater}.jsonl"))
    }

    pub fn features(&self, scenario: &str) -> PathBuf {
        self.root.join("features").join(format!("{scenario}.jsonl"))
    }

    pub fn cluster_dir(&self) -> PathBuf {
        self.root.join("cluster")
    }

    pub fn cluster_model(&self) -> PathBuf {
        self.cluster_dir().join("model.json")
    }

    pub fn models_dir(&self) -> PathBuf {
        self.root.join("models")
    }

    pub fn report_dir(&self) -> PathBuf {
        self.root.join("report")
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn to_jsonl<T: Serialize>(rows: &[T]) -> String {
    rows.iter()
        .map(|r| serde_json::to_string(r).expect("row serializes") + "\n")
        .collect()
}

fn from_jsonl<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn load_manifest(layout: &Layout) -> Result<Manifest> {
    let path = layout.manifest();
    let text = read(&path).map_err(|e| match e {
        Error::Io { path, source } if source.kind() == std::io::ErrorKind::NotFound => Error::Data(format!(
            "{} not found; run `generate` first",
            path.display()
        )),
        e => e,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("manifest: {e}")))
}

/// Scenarios, roster and oracle ratings for every configured template and seed.
pub fn cmd_generate(cfg: &RunConfig) -> Result<Manifest> {
    let layout = Layout::new(&cfg.out);
    let roster = synthetic_roster(&cfg.groups, cfg.seed)?;
    let profiles: Vec<DriverProfile> = roster.iter().map(|r| r.profile.clone()).collect();
    write_file(&layout.roster(), &roster_to_string(&profiles))?;
    let mut scenarios = Vec::new();
    for t in cfg.generate.templates()? {
        let params = cfg.generate.params(t)?;
        for i in 0..cfg.generate.scenarios_per_template {
            let log = generate_synthetic(t, &params, cfg.seed.wrapping_add(i))?;
            save_scenario(&log, layout.scenario(log.name()))?;
            let traces = rate_scenario(&log, &roster, &cfg.groups, cfg.oracle.thresholds, &cfg.podar, cfg.seed)?;
            for tr in &traces {
                save_trace(tr, layout.trace(log.name(), tr.rater_id()))?;
            }
            scenarios.push(log.name().to_string());
        }
    }
    let manifest = Manifest {
        seed: cfg.seed,
        scenarios,
        drivers: roster
            .iter()
            .map(|r| ManifestDriver {
                driver_id: r.profile.driver_id.clone(),
                group: cfg.groups[r.group].name.clone(),
            })
            .collect(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    write_file(&layout.manifest(), &text)?;
    log::info!("generated {} scenarios for {} drivers", manifest.scenarios.len(), roster.len());
    Ok(manifest)
}

/// One feature file per manifest scenario; returns the row counts.
pub fn cmd_features(cfg: &RunConfig) -> Result<Vec<(String, usize)>> {
    let layout = Layout::new(&cfg.out);
    let manifest = load_manifest(&layout)?;
    let mut counts = Vec::new();
    for name in &manifest.scenarios {
        let log = load_scenario(layout.scenario(name))?;
        let features = extract_features_par(&log, &cfg.podar)?;
        save_features(&features, layout.features(name))?;
        counts.push((name.clone(), features.len()));
    }
    Ok(counts)
}

#[derive(Debug, Clone, Serialize)]
struct PcaRow<'a> {
    driver_id: &'a str,
    category: usize,
    x: f64,
    y: f64,
}

#[derive(Debug, Clone)]
pub struct ClusterSummary {
    pub model: ClusterModel,
    pub table: Vec<QualityRow>,
    pub degenerate: bool,
}

/// Selects the cluster count, persists the model, quality table and PCA scatter.
pub fn cmd_cluster(cfg: &RunConfig) -> Result<ClusterSummary> {
    let layout = Layout::new(&cfg.out);
    let profiles = load_roster(layout.roster())?;
    let enc = encode_and_normalize(&profiles, cfg.cluster.outlier_sigma)?;
    let sel = select_cluster_count(
        &enc.vectors,
        cfg.cluster.p_max,
        cfg.cluster.seeds_per_p,
        cfg.seed,
        &KMeansOptions::default(),
    )?;
    let model = ClusterModel::from_fit(&enc, &sel.fits[sel.best_p - 1]);
    model.save(layout.cluster_model())?;
    write_file(&layout.cluster_dir().join("quality.jsonl"), &to_jsonl(&sel.table))?;
    let mut text = String::from("    p           SSE    silhouette  avg_deviation\n");
    for r in &sel.table {
        let sil = r.quality.silhouette.map_or("-".to_string(), |s| format!("{s:.4}"));
        let _ = writeln!(
            text,
            "{}{:>4}  {:>12.4}  {:>12}  {:>13.4}",
            if r.p == sel.best_p { "*" } else { " " },
            r.p,
            r.quality.sse,
            sil,
            r.quality.avg_deviation
        );
    }
    if sel.degenerate {
        text.push_str("degenerate roster: no cluster count has a defined silhouette\n");
    }
    write_file(&layout.cluster_dir().join("quality.txt"), &text)?;
    if enc.vectors.len() >= 3 {
        let pca = pca_project(&enc.vectors)?;
        let rows: Vec<PcaRow> = enc
            .ids
            .iter()
            .zip(&pca.points)
            .map(|(id, pt)| PcaRow {
                driver_id: id,
                category: model.assignments[id],
                x: pt[0],
                y: pt[1],
            })
            .collect();
        write_file(&layout.cluster_dir().join("pca.jsonl"), &to_jsonl(&rows))?;
    }
    Ok(ClusterSummary {
        model,
        table: sel.table,
        degenerate: sel.degenerate,
    })
}

/// Scenarios, features and every rating trace found on disk, in manifest order.
pub fn load_corpus(layout: &Layout, manifest: &Manifest) -> Result<Vec<ScenarioData>> {
    manifest
        .scenarios
        .iter()
        .map(|name| {
            let log = load_scenario(layout.scenario(name))?;
            let features = load_features(layout.features(name))?;
            let dir = layout.ratings_dir(name);
            let mut files: Vec<PathBuf> = match fs::read_dir(&dir) {
                Ok(entries) => entries
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
                    .collect(),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => vec![],
                Err(e) => return Err(Error::io(&dir, e)),
            };
            files.sort();
            let traces = files.iter().map(load_trace).collect::<Result<Vec<_>>>()?;
            Ok(ScenarioData { log, features, traces })
        })
        .collect()
}

/// Rater → category name from the persisted cluster model, if any.
pub fn load_categories(layout: &Layout) -> Result<BTreeMap<String, String>> {
    let path = layout.cluster_model();
    if !path.exists() {
        return Ok(BTreeMap::new());
    }
    let model = ClusterModel::load(&path)?;
    let mut out: BTreeMap<String, String> = model
        .assignments
        .iter()
        .map(|(id, &k)| (id.clone(), category_name(k)))
        .collect();
    if layout.roster().exists() {
        for p in load_roster(layout.roster())? {
            out.entry(p.driver_id.clone())
                .or_insert_with(|| category_name(model.assign(&p)));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub arch: Arch,
    pub group: String,
    pub checkpoint: String,
    pub samples: usize,
    pub best_epoch: usize,
}

/// Test-split evaluation of one model.
pub fn evaluate_split(model: &Model, data: &[WindowSample], split: &Split, group: &str) -> Result<RunResult> {
    let test: Vec<WindowSample> = split.test.iter().map(|&i| data[i].clone()).collect();
    let preds = model.predict(&test)?;
    let labels: Vec<usize> = test.iter().map(|s| s.label.index()).collect();
    let pred_levels: Vec<usize> = preds.iter().map(|p| p.0.index()).collect();
    let probs: Vec<[f64; NUM_LEVELS]> = preds.iter().map(|p| p.1).collect();
    let auc = macro_ovr_auc(&probs, &labels).map(|r| r.macro_auc).unwrap_or(f64::NAN);
    Ok(RunResult::new(
        model.config.arch.display_name(),
        group,
        auc,
        confusion(&pred_levels, &labels)?,
    ))
}

fn checkpoint_stem(arch: Arch, group: &str) -> String {
    format!("{}_{}", arch.as_str(), group)
}

/// Minimum windows for a group to get its own model.
const MIN_GROUP_SAMPLES: usize = 20;

/// Trains every configured architecture on the pooled data and on each category.
pub fn cmd_train(cfg: &RunConfig) -> Result<Vec<ModelEntry>> {
    let layout = Layout::new(&cfg.out);
    let manifest = load_manifest(&layout)?;
    let corpus = load_corpus(&layout, &manifest)?;
    let categories = load_categories(&layout)?;
    let tc = &cfg.train.config;
    let sets = group_datasets(&corpus, &categories, tc.model.window, tc.model.ego_channels)?;
    if sets[POOLED_GROUP].is_empty() {
        return Err(Error::Data("no labeled windows; are there rating traces?".into()));
    }
    let dir = layout.models_dir();
    let mut index = Vec::new();
    for &arch in &cfg.train.models {
        for (group, data) in &sets {
            if data.len() < MIN_GROUP_SAMPLES {
                log::warn!("skipping {group}: only {} windows", data.len());
                continue;
            }
            let stem = checkpoint_stem(arch, group);
            log::info!("training {stem} on {} windows", data.len());
            let outcome = train(data, &cfg.train_config(arch))?;
            let file = format!("{stem}.json");
            save_checkpoint(&outcome.model, dir.join(&file))?;
            write_file(&dir.join(format!("{stem}.history.jsonl")), &history_to_jsonl(&outcome.history))?;
            let result = evaluate_split(&outcome.model, data, &outcome.split, group)?;
            let metrics = serde_json::to_string_pretty(&result).expect("metrics serialize") + "\n";
            write_file(&dir.join(format!("{stem}.metrics.json")), &metrics)?;
            index.push(ModelEntry {
                arch,
                group: group.clone(),
                checkpoint: file,
                samples: data.len(),
                best_epoch: outcome.best_epoch,
            });
        }
    }
    let text = serde_json::to_string_pretty(&index).expect("index serializes") + "\n";
    write_file(&dir.join("index.json"), &text)?;
    Ok(index)
}

/// Velocity, acceleration, the four directional risks and the two weighted counts.
pub const ANOVA_FEATURES: [&str; 8] = [
    "velocity",
    "acceleration",
    "risk_front",
    "risk_left",
    "risk_right",
    "risk_rear",
    "count_vehicles_w",
    "count_pedestrians_w",
];

/// One-way ANOVA of each frame-level feature grouped by the rated level,
/// over every labeled (frame, rater) pair.
pub fn anova_features(corpus: &[ScenarioData]) -> Result<Vec<AnovaRow>> {
    let mut values: Vec<Vec<f64>> = vec![vec![]; ANOVA_FEATURES.len()];
    let mut groups = Vec::new();
    for d in corpus {
        let merged = crate::scenario::merge_ratings(&d.log, &d.traces)?;
        for row in merged.rows() {
            let frame = &d.log.frames()[row.frame];
            let f: &RiskFeatures = &d.features[row.frame];
            let mut v = vec![frame.ego.speed(), frame.ego.acc.norm()];
            v.extend_from_slice(&f.to_array());
            for (col, x) in values.iter_mut().zip(v) {
                col.push(x);
            }
            groups.push(row.level.index());
        }
    }
    ANOVA_FEATURES
        .iter()
        .zip(&values)
        .map(|(name, v)| anova_oneway(name, v, &groups))
        .collect()
}

/// Evaluates every indexed checkpoint on its rebuilt test split and writes the report.
pub fn cmd_eval(cfg: &RunConfig) -> Result<Vec<RunResult>> {
    let layout = Layout::new(&cfg.out);
    let manifest = load_manifest(&layout)?;
    let corpus = load_corpus(&layout, &manifest)?;
    let categories = load_categories(&layout)?;
    let index_path = layout.models_dir().join("index.json");
    let index: Vec<ModelEntry> = serde_json::from_str(&read(&index_path)?)
        .map_err(|e| Error::Format(format!("model index: {e}")))?;
    if index.is_empty() {
        return Err(Error::Data("model index is empty; run `train` first".into()));
    }
    let mut cache: BTreeMap<(usize, crate::network::EgoChannels), BTreeMap<String, Vec<WindowSample>>> =
        BTreeMap::new();
    let mut results = Vec::new();
    for entry in &index {
        let model = load_checkpoint(layout.models_dir().join(&entry.checkpoint))?;
        let key = (model.config.window, model.config.ego_channels);
        if !cache.contains_key(&key) {
            cache.insert(key, group_datasets(&corpus, &categories, key.0, key.1)?);
        }
        let data = cache[&key].get(&entry.group).ok_or_else(|| {
            Error::Mismatch(format!("no data for group {} of {}", entry.group, entry.checkpoint))
        })?;
        let labels: Vec<usize> = data.iter().map(|s| s.label.index()).collect();
        let split = stratified_split(&labels, model.seed);
        results.push(evaluate_split(&model, data, &split, &entry.group)?);
    }
    let anova = anova_features(&corpus)?;
    let dir = layout.report_dir();
    write_file(&dir.join("results.jsonl"), &to_jsonl(&results))?;
    write_file(&dir.join("anova.jsonl"), &to_jsonl(&anova))?;
    render_report(&dir, &results, &anova)?;
    Ok(results)
}

/// Re-renders the human-readable report from `results.jsonl` and `anova.jsonl`.
pub fn cmd_report(cfg: &RunConfig) -> Result<String> {
    let dir = Layout::new(&cfg.out).report_dir();
    let results: Vec<RunResult> = from_jsonl(&read(&dir.join("results.jsonl"))?)?;
    let anova: Vec<AnovaRow> = from_jsonl(&read(&dir.join("anova.jsonl"))?)?;
    render_report(&dir, &results, &anova)
}

fn render_report(dir: &Path, results: &[RunResult], anova: &[AnovaRow]) -> Result<String> {
    let report = compare_report(results)?;
    let auc = report.to_text();
    write_file(&dir.join("auc.txt"), &auc)?;
    write_file(&dir.join("auc.jsonl"), &report.to_jsonl())?;
    write_file(&dir.join("anova.txt"), &anova_table(anova))?;
    let mut m = String::new();
    for r in results {
        let _ = writeln!(m, "{} / {}  (accuracy {:.3}, macro F1 {:.3})", r.model, r.group, r.confusion.accuracy(), r.metrics.macro_f1);
        let _ = writeln!(m, "  true\\pred {:>6}{:>6}{:>6}{:>6}{:>6}", 0, 1, 2, 3, 4);
        for (k, row) in r.confusion.counts.iter().enumerate() {
            let _ = writeln!(m, "  {k:>9} {:>6}{:>6}{:>6}{:>6}{:>6}", row[0], row[1], row[2], row[3], row[4]);
        }
        let _ = writeln!(m, "  class  precision  recall      f1");
        for k in 0..NUM_LEVELS {
            let flag = if r.metrics.absent[k] {
                "  (absent)"
            } else if r.metrics.precision_undefined[k] {
                "  (never predicted)"
            } else {
                ""
            };
            let _ = writeln!(
                m,
                "  {k:>5}  {:>9.3}  {:>6.3}  {:>6.3}{flag}",
                r.metrics.precision[k], r.metrics.recall[k], r.metrics.f1[k]
            );
        }
        m.push('\n');
    }
    write_file(&dir.join("metrics.txt"), &m)?;
    Ok(auc)
}

/// All stages in order.
pub fn cmd_run(cfg: &RunConfig) -> Result<String> {
    cmd_generate(cfg)?;
    cmd_features(cfg)?;
    cmd_cluster(cfg)?;
    cmd_train(cfg)?;
    cmd_eval(cfg)?;
    cmd_report(cfg)
}
