//! Pipeline stages on a tiny study: every artifact is readable by the stage
//! that consumes it, reruns are byte-identical, and the CLI maps failures to
//! exit codes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use prisk::clustering::{load_roster, ClusterModel};
use prisk::evaluation::RunResult;
use prisk::network::{load_checkpoint, Arch};
use prisk::pipeline::commands::{load_corpus, load_manifest, ModelEntry};
use prisk::pipeline::{cmd_cluster, cmd_eval, cmd_features, cmd_generate, cmd_run, cmd_train, Layout, RunConfig};
use prisk::riskfield::load_features;
use prisk::scenario::{load_scenario, load_trace, merge_ratings, RatingSource};

fn tiny(out: &Path, seed: u64) -> RunConfig {
    let mut cfg = RunConfig::from_toml_str(
        r#"
        [generate]
        templates = ["straight_cruise", "lead_brake", "pedestrian_cross"]
        scenarios_per_template = 2
        duration = 8.0

        [cluster]
        p_max = 4
        seeds_per_p = 3

        [train]
        window = 5
        hidden = 4
        attn = 4
        epochs = 2
        batch = 32
        "#,
    )
    .unwrap();
    for g in &mut cfg.groups {
        g.drivers = 2;
    }
    cfg.seed = seed;
    cfg.out = out.to_path_buf();
    cfg
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(dir: &Path, root: &Path, acc: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(&p, root, acc);
            } else {
                acc.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    let mut acc = BTreeMap::new();
    walk(root, root, &mut acc);
    acc
}

#[test]
fn every_stage_output_is_consumable() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny(tmp.path(), 3);
    let layout = Layout::new(tmp.path());

    let manifest = cmd_generate(&cfg).unwrap();
    assert_eq!(manifest.scenarios.len(), 6);
    assert_eq!(manifest.drivers.len(), 8);
    assert_eq!(load_manifest(&layout).unwrap(), manifest);
    assert_eq!(load_roster(layout.roster()).unwrap().len(), 8);
    for name in &manifest.scenarios {
        let log = load_scenario(layout.scenario(name)).unwrap();
        assert_eq!(log.name(), name);
        let traces: Vec<_> = manifest
            .drivers
            .iter()
            .map(|d| load_trace(layout.trace(name, &d.driver_id)).unwrap())
            .collect();
        assert!(traces.iter().all(|t| t.source() == RatingSource::Oracle));
        let ds = merge_ratings(&log, &traces).unwrap();
        assert_eq!(ds.rows().count(), 8 * log.len());
    }

    let counts = cmd_features(&cfg).unwrap();
    for (name, rows) in &counts {
        let log = load_scenario(layout.scenario(name)).unwrap();
        let features = load_features(layout.features(name)).unwrap();
        assert_eq!(*rows, log.len());
        assert_eq!(features.len(), log.len());
        if name.starts_with("straight_cruise") {
            assert!(features.iter().all(|f| f.to_array() == [0.0; 6]), "{name}");
        }
    }

    let summary = cmd_cluster(&cfg).unwrap();
    let model = ClusterModel::load(layout.cluster_model()).unwrap();
    assert_eq!(model, summary.model);
    assert_eq!(model.assignments.len(), 8);
    assert_eq!(summary.table.len(), 4);
    assert!(layout.cluster_dir().join("pca.jsonl").exists());

    let entries = cmd_train(&cfg).unwrap();
    let index: Vec<ModelEntry> =
        serde_json::from_str(&fs::read_to_string(layout.models_dir().join("index.json")).unwrap()).unwrap();
    assert_eq!(index, entries);
    let groups = 1 + model.p;
    assert_eq!(entries.len(), 3 * groups);
    for arch in Arch::ALL {
        assert_eq!(entries.iter().filter(|e| e.arch == arch).count(), groups);
    }
    for e in &entries {
        let m = load_checkpoint(layout.models_dir().join(&e.checkpoint)).unwrap();
        assert_eq!(m.config.arch, e.arch);
        assert!(m.params.is_finite());
    }

    // reloaded checkpoints reproduce the metrics measured right after training
    let results = cmd_eval(&cfg).unwrap();
    assert_eq!(results.len(), entries.len());
    for (r, e) in results.iter().zip(&entries) {
        let stem = e.checkpoint.trim_end_matches(".json");
        let text = fs::read_to_string(layout.models_dir().join(format!("{stem}.metrics.json"))).unwrap();
        let at_train: RunResult = serde_json::from_str(&text).unwrap();
        assert_eq!(r.confusion, at_train.confusion, "{stem}");
        assert_eq!(r.auc.to_bits(), at_train.auc.to_bits(), "{stem}");
    }

    let report = layout.report_dir();
    let anova = fs::read_to_string(report.join("anova.txt")).unwrap();
    assert_eq!(anova.lines().count(), 1 + 8, "{anova}");
    let auc = fs::read_to_string(report.join("auc.txt")).unwrap();
    assert!(auc.lines().any(|l| l.starts_with("All")));
    assert!(auc.lines().any(|l| l.starts_with("Average")));
    assert_eq!(load_corpus(&layout, &manifest).unwrap().len(), 6);
}

#[test]
fn full_run_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = cmd_run(&tiny(a.path(), 11)).unwrap();
    let rb = cmd_run(&tiny(b.path(), 11)).unwrap();
    assert_eq!(ra, rb);
    let (ta, tb) = (tree(a.path()), tree(b.path()));
    assert_eq!(ta.keys().collect::<Vec<_>>(), tb.keys().collect::<Vec<_>>());
    for (path, bytes) in &ta {
        assert!(tb[path] == *bytes, "{} differs", path.display());
    }
}

#[test]
fn generate_writes_templates_times_seeds() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig {
        out: tmp.path().to_path_buf(),
        seed: 4,
        ..RunConfig::default()
    };
    cfg.generate.scenarios_per_template = 5;
    let m = cmd_generate(&cfg).unwrap();
    assert_eq!(m.scenarios.len(), 30);
    let first = tree(tmp.path());
    cmd_generate(&cfg).unwrap();
    assert_eq!(tree(tmp.path()), first);
}

#[test]
fn training_without_ratings_is_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny(tmp.path(), 5);
    cmd_generate(&cfg).unwrap();
    cmd_features(&cfg).unwrap();
    fs::remove_dir_all(tmp.path().join("ratings")).unwrap();
    let err = cmd_train(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 3, "{err}");
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_prisk")).args(args).output().unwrap()
}

#[test]
fn cli_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ws");
    let out = out.to_str().unwrap();

    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "seed = 1\nunknown_key = 3\n").unwrap();
    let r = cli(&["generate", "--config", bad.to_str().unwrap(), "--out", out]);
    assert_eq!(r.status.code(), Some(2), "{}", String::from_utf8_lossy(&r.stderr));

    let r = cli(&["generate", "--config", tmp.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));

    let r = cli(&["features", "--out", out]);
    assert_eq!(r.status.code(), Some(3), "{}", String::from_utf8_lossy(&r.stderr));

    let good = tmp.path().join("good.toml");
    fs::write(
        &good,
        "[generate]\ntemplates = [\"lead_brake\"]\nscenarios_per_template = 1\nduration = 5.0\n",
    )
    .unwrap();
    let r = cli(&["generate", "--config", good.to_str().unwrap(), "--seed", "9", "--out", out]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(Path::new(out).join("scenarios").join("lead_brake_9.jsonl").exists());

    let r = cli(&["features", "--config", good.to_str().unwrap(), "--out", out]);
    assert_eq!(r.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&r.stdout).contains("50 rows"));

    fs::write(Path::new(out).join("scenarios").join("lead_brake_9.jsonl"), "{not json\n").unwrap();
    let r = cli(&["features", "--out", out]);
    assert_eq!(r.status.code(), Some(3));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let study = RunConfig::load(dir.join("study.toml")).unwrap();
    let expected = RunConfig {
        seed: 1,
        ..RunConfig::default()
    };
    assert_eq!(study, expected);
    let smoke = RunConfig::load(dir.join("smoke.toml")).unwrap();
    smoke.validate().unwrap();
}
