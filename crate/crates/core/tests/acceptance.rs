//! Acceptance gate. Runs every exit criterion at its pinned tolerance and
//! prints one PASS/FAIL line per criterion; exits non-zero if any fails.
//!
//! `cargo test --test acceptance -- <substring>` runs only the matching
//! criteria.

mod common;

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use prisk::clustering::{
    encode_and_normalize, kmeans, select_cluster_count, FeatureVector, KMeansOptions, DIMS,
};
use prisk::evaluation::{anova_oneway, macro_ovr_auc, RunResult, POOLED_GROUP};
use prisk::geometry::Vec2;
use prisk::network::Arch;
use prisk::pipeline::study::{default_groups, synthetic_roster};
use prisk::pipeline::{cmd_run, RunConfig};
use prisk::riskfield::{directional_risks, frame_features, podar, PodarConfig, RelativeKinematics};
use prisk::scenario::{EgoState, Frame, ParticipantKind, ParticipantState};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MINUTE: Duration = Duration::from_secs(60);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

// ---------------------------------------------------------------- gradients

fn gradient_oracle() -> Verdict {
    let mut worst = (0.0, "", 0);
    for seed in 0..20 {
        let (err, name) = common::max_rel_error(Arch::Lstmca, false, seed);
        if err > worst.0 {
            worst = (err, name, seed);
        }
    }
    verdict(
        worst.0 < common::TOL,
        format!(
            "LSTMCA H=4 d_a=4 T=5, 20 seeds: max relative error {:.2e} ({} seed {}), tolerance 1e-4",
            worst.0, worst.1, worst.2
        ),
    )
}

// ---------------------------------------------------------------------- AUC

fn brute_force_macro_auc(probs: &[[f64; 5]], labels: &[usize]) -> Option<f64> {
    let mut aucs = vec![];
    for k in 0..5 {
        let pos: Vec<f64> = probs.iter().zip(labels).filter(|(_, &y)| y == k).map(|(p, _)| p[k]).collect();
        let neg: Vec<f64> = probs.iter().zip(labels).filter(|(_, &y)| y != k).map(|(p, _)| p[k]).collect();
        if pos.is_empty() || neg.is_empty() {
            continue;
        }
        let mut wins = 0.0;
        for &a in &pos {
            for &b in &neg {
                wins += if a > b {
                    1.0
                } else if a == b {
                    0.5
                } else {
                    0.0
                };
            }
        }
        aucs.push(wins / (pos.len() * neg.len()) as f64);
    }
    (!aucs.is_empty()).then(|| aucs.iter().sum::<f64>() / aucs.len() as f64)
}

fn auc_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0xa0c);
    let mut worst: f64 = 0.0;
    let mut mismatched = 0;
    for i in 0..100 {
        let n = rng.gen_range(2..=500);
        // coarse score grids on some instances force ties
        let grid = if i % 3 == 0 { 8.0 } else { 0.0 };
        let probs: Vec<[f64; 5]> = (0..n)
            .map(|_| {
                let raw: [f64; 5] = std::array::from_fn(|_| {
                    let x: f64 = rng.gen_range(0.01..1.0);
                    if grid > 0.0 {
                        (x * grid).ceil()
                    } else {
                        x
                    }
                });
                let s: f64 = raw.iter().sum();
                raw.map(|x| x / s)
            })
            .collect();
        let classes = rng.gen_range(1..=5);
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..classes)).collect();
        match (macro_ovr_auc(&probs, &labels), brute_force_macro_auc(&probs, &labels)) {
            (Ok(a), Some(b)) => worst = worst.max((a.macro_auc - b).abs()),
            (Err(_), None) => {}
            _ => mismatched += 1,
        }
    }
    verdict(
        worst <= 1e-9 && mismatched == 0,
        format!("100 instances, n <= 500: max |rank AUC - pairwise AUC| {worst:.1e}, definedness mismatches {mismatched}, tolerance 1e-9"),
    )
}

// ------------------------------------------------------------------ k-means

fn partition_cost(vectors: &[FeatureVector], assign: &[usize], p: usize) -> f64 {
    let mut total = 0.0;
    for k in 0..p {
        let members: Vec<&FeatureVector> = vectors.iter().zip(assign).filter(|(_, &a)| a == k).map(|(v, _)| v).collect();
        let m = members.len() as f64;
        for j in 0..DIMS {
            let mean = members.iter().map(|v| v[j]).sum::<f64>() / m;
            total += members.iter().map(|v| (v[j] - mean).powi(2)).sum::<f64>();
        }
    }
    total
}

fn exhaustive_minimum(vectors: &[FeatureVector], p: usize) -> f64 {
    let n = vectors.len();
    let mut assign = vec![0usize; n];
    let mut best = f64::INFINITY;
    loop {
        let mut used = vec![false; p];
        assign.iter().for_each(|&a| used[a] = true);
        if used.iter().all(|&u| u) {
            best = best.min(partition_cost(vectors, &assign, p));
        }
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            assign[i] += 1;
            if assign[i] < p {
                break;
            }
            assign[i] = 0;
            i += 1;
        }
    }
}

fn kmeans_oracle() -> Verdict {
    const RESTARTS: u64 = 20;
    let mut rng = ChaCha8Rng::seed_from_u64(0xc1u64);
    let opts = KMeansOptions::default();
    let mut misses = 0;
    let mut increases = 0;
    let mut runs = 0;
    for inst in 0..50u64 {
        let n = rng.gen_range(3..=10);
        let p = rng.gen_range(1..=3usize);
        let vectors: Vec<FeatureVector> = (0..n).map(|_| std::array::from_fn(|_| rng.gen_range(0.0..1.0))).collect();
        let mut best = f64::INFINITY;
        for r in 0..RESTARTS {
            let fit = kmeans(&vectors, p, inst * 1000 + r, &opts).expect("valid instance");
            runs += 1;
            if fit.history.windows(2).any(|w| w[1] > w[0] + 1e-12) {
                increases += 1;
            }
            best = best.min(fit.objective);
        }
        let exact = exhaustive_minimum(&vectors, p);
        if (best - exact).abs() > 1e-9 * exact.max(1.0) {
            misses += 1;
        }
    }
    verdict(
        misses == 0 && increases == 0,
        format!(
            "50 instances (n <= 10, p <= 3), best of {RESTARTS} seeded runs: {misses} differ from the exhaustive minimum, {increases} of {runs} runs increased J"
        ),
    )
}

fn cluster_count_recovery() -> Verdict {
    let groups = default_groups();
    let mut hits = 0;
    let mut seen = vec![];
    for seed in 1..=10 {
        let roster = synthetic_roster(&groups, seed).expect("roster");
        let profiles: Vec<_> = roster.into_iter().map(|r| r.profile).collect();
        let enc = encode_and_normalize(&profiles, 4.0).expect("encodable roster");
        let sel = select_cluster_count(&enc.vectors, 8, 10, seed, &KMeansOptions::default()).expect("selection");
        let sil = sel.table[sel.best_p - 1].quality.silhouette.unwrap_or(f64::NAN);
        if sel.best_p == 4 && sil > 0.5 {
            hits += 1;
        }
        seen.push(format!("{}:{sil:.2}", sel.best_p));
    }
    verdict(
        hits >= 9,
        format!("{hits}/10 seeds give best_p = 4 with silhouette > 0.5 (need 9) [p:silhouette {}]", seen.join(" ")),
    )
}

// -------------------------------------------------------------------- PODAR

fn random_kind(rng: &mut ChaCha8Rng) -> ParticipantKind {
    ParticipantKind::ALL[rng.gen_range(0..3)]
}

fn random_frame(rng: &mut ChaCha8Rng, participants: usize) -> Frame {
    let yaw = rng.gen_range(-PI + 1e-9..PI);
    let speed = rng.gen_range(0.0..25.0);
    let ego = EgoState {
        t: 0.0,
        pos: Vec2::new(rng.gen_range(-100.0..100.0), rng.gen_range(-100.0..100.0)),
        vel: Vec2::new(speed * yaw.cos(), speed * yaw.sin()),
        acc: Vec2::ZERO,
        yaw,
        pitch: 0.0,
        roll: 0.0,
    };
    let participants = (0..participants)
        .map(|i| {
            let d = rng.gen_range(1.0..70.0);
            let a = rng.gen_range(-PI..PI);
            ParticipantState {
                id: format!("p{i}"),
                kind: random_kind(rng),
                pos: Vec2::new(ego.pos.x + d * a.cos(), ego.pos.y + d * a.sin()),
                vel: Vec2::new(rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0)),
            }
        })
        .collect();
    Frame {
        t: 0.0,
        ego,
        participants,
    }
}

fn podar_properties() -> Verdict {
    let cfg = PodarConfig::default();
    let doubled = cfg.scaled_masses(2.0);
    let mut rng = ChaCha8Rng::seed_from_u64(0x90da);
    let mut failures: BTreeMap<&str, usize> = BTreeMap::new();
    let mut fail = |what| *failures.entry(what).or_default() += 1;
    const CASES: usize = 20_000;

    for _ in 0..CASES {
        let kind = random_kind(&mut rng);
        let d = rng.gen_range(0.01..80.0);
        let receding = -rng.gen_range(0.0..30.0);
        if podar(&RelativeKinematics::new(d, 0.0, receding), &cfg, kind) != 0.0 {
            fail("zero law");
        }

        // fixed closing speed and time to collision, two distances
        let v = rng.gen_range(0.1..30.0);
        let ttc = rng.gen_range(0.05..10.0);
        let d1 = rng.gen_range(0.01..cfg.detect_radius);
        let d2 = rng.gen_range(0.01..cfg.detect_radius);
        if d1 != d2 {
            let at = |d| {
                podar(
                    &RelativeKinematics {
                        distance: d,
                        bearing: 0.0,
                        closing_speed: v,
                        ttc,
                    },
                    &cfg,
                    kind,
                )
            };
            let (near, far) = if d1 < d2 { (at(d1), at(d2)) } else { (at(d2), at(d1)) };
            if near <= far {
                fail("distance monotonicity");
            }
        }
    }

    for _ in 0..CASES / 10 {
        let n = rng.gen_range(0..=10);
        let mut frame = random_frame(&mut rng, n);
        let base = frame_features(&frame, &cfg).expect("separated participants");
        let risks = directional_risks(&frame, &cfg).unwrap();
        let scaled = directional_risks(&frame, &doubled).unwrap();
        if risks.iter().zip(&scaled).any(|(a, b)| *b != 2.0 * a) {
            fail("mass linearity");
        }
        frame.participants.shuffle(&mut rng);
        if frame_features(&frame, &cfg).unwrap() != base {
            fail("permutation invariance");
        }
        // all participants receding from the ego
        for p in &mut frame.participants {
            let away = (p.pos - frame.ego.pos) * (1.0 / (p.pos - frame.ego.pos).norm());
            p.vel = frame.ego.vel + away * rng.gen_range(0.0..10.0);
        }
        if directional_risks(&frame, &cfg).unwrap() != [0.0; 4] {
            fail("zero law");
        }
    }

    let summary = if failures.is_empty() {
        "none".to_string()
    } else {
        failures.iter().map(|(k, v)| format!("{k}: {v}")).collect::<Vec<_>>().join(", ")
    };
    verdict(
        failures.is_empty(),
        format!(
            "{CASES} kinematics + {} random frames (zero law, distance monotonicity, mass linearity, permutation invariance): violations {summary}",
            CASES / 10
        ),
    )
}

// -------------------------------------------------------------------- ANOVA

/// Regularized incomplete beta by Simpson quadrature after t = sin²θ, which
/// removes the endpoint singularities for a, b >= 1/2.
fn incomplete_beta_quadrature(x: f64, a: f64, b: f64) -> f64 {
    let kernel = |th: f64| 2.0 * th.sin().powf(2.0 * a - 1.0) * th.cos().powf(2.0 * b - 1.0);
    let simpson = |hi: f64| {
        let n = 20_000;
        let h = hi / n as f64;
        let mut s = kernel(0.0) + kernel(hi);
        for i in 1..n {
            s += kernel(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    };
    simpson(x.sqrt().asin()) / simpson(FRAC_PI_2)
}

fn f_tail_oracle(f: f64, d1: f64, d2: f64) -> f64 {
    incomplete_beta_quadrature(d2 / (d2 + d1 * f), d2 / 2.0, d1 / 2.0)
}

fn anova_check() -> Verdict {
    let row = anova_oneway("x", &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], &[0, 0, 0, 1, 1, 1]).expect("textbook case");
    let oracle_p = f_tail_oracle(13.5, 1.0, 4.0);
    let f_ok = row.f_stat == 13.5 && row.sumsq == 13.5 && row.ss_within == 4.0;
    let p_ok = (row.p_value - oracle_p).abs() < 1e-4;

    let mut rng = ChaCha8Rng::seed_from_u64(0xa40);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let n = rng.gen_range(4..200);
        let k = rng.gen_range(2..=5).min(n - 1);
        let groups: Vec<usize> = (0..n).map(|i| if i < k { i } else { rng.gen_range(0..k) }).collect();
        let values: Vec<f64> = groups.iter().map(|&g| g as f64 * 0.7 + rng.gen_range(-3.0..3.0)).collect();
        let r = anova_oneway("x", &values, &groups).expect("random data");
        let mean = values.iter().sum::<f64>() / n as f64;
        let total: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        worst = worst.max((r.sumsq + r.ss_within - total).abs());
    }
    verdict(
        f_ok && p_ok && worst < 1e-9,
        format!(
            "{{1,2,3}} vs {{4,5,6}}: F = {} (exact 13.5), p = {:.6} vs quadrature {:.6}, tolerance 1e-4; SS identity max error {worst:.1e} over 500 random sets, tolerance 1e-9",
            row.f_stat, row.p_value, oracle_p
        ),
    )
}

// --------------------------------------------------------------- end to end

const E2E_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

/// Workspace of the first end-to-end seed, reused by the determinism check.
static FIRST_RUN: Mutex<Option<(tempfile::TempDir, u64)>> = Mutex::new(None);

fn study_config(seed: u64, out: &Path) -> RunConfig {
    RunConfig {
        seed,
        out: out.to_path_buf(),
        ..RunConfig::default()
    }
}

fn results(out: &Path) -> Vec<RunResult> {
    fs::read_to_string(out.join("report").join("results.jsonl"))
        .expect("results written")
        .lines()
        .map(|l| serde_json::from_str(l).expect("result row"))
        .collect()
}

struct SeedOutcome {
    pooled: BTreeMap<String, f64>,
    average: BTreeMap<String, f64>,
    elapsed: Duration,
}

fn run_seed(seed: u64, out: &Path) -> SeedOutcome {
    let cfg = study_config(seed, out);
    let start = Instant::now();
    cmd_run(&cfg).expect("pipeline run");
    let elapsed = start.elapsed();
    let mut pooled = BTreeMap::new();
    let mut per_cat: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in results(out) {
        if r.group == POOLED_GROUP {
            pooled.insert(r.model.clone(), r.auc);
        } else {
            per_cat.entry(r.model.clone()).or_default().push(r.auc);
        }
    }
    let average = per_cat
        .into_iter()
        .map(|(m, v)| (m, v.iter().sum::<f64>() / v.len() as f64))
        .collect();
    SeedOutcome {
        pooled,
        average,
        elapsed,
    }
}

fn ordered(aucs: &BTreeMap<String, f64>) -> bool {
    aucs["LSTMCA"] >= aucs["LSTM"] && aucs["LSTM"] >= aucs["FCNN"]
}

fn end_to_end() -> Vec<(&'static str, Verdict)> {
    let cfg = RunConfig::default();
    let scenarios = cfg.generate.templates().unwrap().len() as u64 * cfg.generate.scenarios_per_template;
    let mut outcomes = vec![];
    for (i, &seed) in E2E_SEEDS.iter().enumerate() {
        let dir = tempfile::tempdir().expect("tempdir");
        let o = run_seed(seed, dir.path());
        println!(
            "      seed {seed}: pooled LSTMCA {:.4} LSTM {:.4} FCNN {:.4} | category average LSTMCA {:.4} LSTM {:.4} FCNN {:.4} | {:.0} s",
            o.pooled["LSTMCA"],
            o.pooled["LSTM"],
            o.pooled["FCNN"],
            o.average["LSTMCA"],
            o.average["LSTM"],
            o.average["FCNN"],
            o.elapsed.as_secs_f64()
        );
        if i == 0 {
            *FIRST_RUN.lock().unwrap() = Some((dir, seed));
        }
        outcomes.push(o);
    }
    let n = outcomes.len();
    let a = outcomes.iter().filter(|o| o.pooled["LSTMCA"] >= 0.85).count();
    let b = outcomes.iter().filter(|o| o.average["LSTMCA"] > o.pooled["LSTMCA"]).count();
    let c = outcomes.iter().filter(|o| ordered(&o.pooled)).count();
    let c_avg = outcomes.iter().filter(|o| ordered(&o.average)).count();
    let total: Duration = outcomes.iter().map(|o| o.elapsed).sum();
    let min_pooled = outcomes.iter().map(|o| o.pooled["LSTMCA"]).fold(f64::INFINITY, f64::min);
    vec![
        (
            "e2e (a) pooled LSTMCA AUC",
            verdict(
                a == n,
                format!("{scenarios} scenarios, 4 rater groups: pooled LSTMCA macro AUC >= 0.85 in {a}/{n} seeds (min {min_pooled:.4})"),
            ),
        ),
        (
            "e2e (b) personalization gain",
            verdict(b >= 4, format!("category-average LSTMCA AUC > pooled in {b}/{n} seeds (need 4)")),
        ),
        (
            "e2e (c) LSTMCA >= LSTM >= FCNN",
            verdict(
                c >= 4,
                format!("ordering holds on the pooled split in {c}/{n} seeds (need 4); on the category average in {c_avg}/{n}"),
            ),
        ),
        (
            "e2e runtime",
            verdict(
                total < 15 * MINUTE,
                format!("{n} seeds single-threaded in {:.1} min (limit 15)", total.as_secs_f64() / 60.0),
            ),
        ),
    ]
}

fn report_files(out: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let dir = out.join("report");
    let mut files = BTreeMap::new();
    for e in fs::read_dir(&dir).expect("report dir") {
        let p = e.unwrap().path();
        files.insert(p.strip_prefix(out).unwrap().to_path_buf(), fs::read(&p).unwrap());
    }
    files
}

fn determinism() -> Verdict {
    let first = FIRST_RUN.lock().unwrap().take();
    let (first_dir, seed) = match first {
        Some(run) => run,
        None => {
            let dir = tempfile::tempdir().expect("tempdir");
            cmd_run(&study_config(E2E_SEEDS[0], dir.path())).expect("pipeline run");
            (dir, E2E_SEEDS[0])
        }
    };
    let second = tempfile::tempdir().expect("tempdir");
    cmd_run(&study_config(seed, second.path())).expect("pipeline run");
    let (a, b) = (report_files(first_dir.path()), report_files(second.path()));
    let differing: Vec<String> = a
        .keys()
        .chain(b.keys())
        .filter(|k| a.get(*k) != b.get(*k))
        .map(|k| k.display().to_string())
        .collect();
    verdict(
        differing.is_empty() && !a.is_empty(),
        format!(
            "two full runs with seed {seed}: {} report files compared, {} differ{}",
            a.len(),
            differing.len(),
            if differing.is_empty() { String::new() } else { format!(" ({})", differing.join(", ")) }
        ),
    )
}

// --------------------------------------------------------------------- main

type Check = fn() -> Vec<(&'static str, Verdict)>;

fn single(name: &'static str, f: fn() -> Verdict) -> impl Fn() -> Vec<(&'static str, Verdict)> {
    move || vec![(name, f())]
}

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |name: &str| filters.is_empty() || filters.iter().any(|f| name.contains(f.as_str()));

    let checks: Vec<(&str, Duration, Box<dyn Fn() -> Vec<(&'static str, Verdict)>>)> = vec![
        ("gradient oracle", MINUTE, Box::new(single("gradient oracle", gradient_oracle))),
        ("AUC oracle", MINUTE, Box::new(single("AUC oracle", auc_oracle))),
        ("k-means oracle", MINUTE, Box::new(single("k-means oracle", kmeans_oracle))),
        ("cluster-count recovery", MINUTE, Box::new(single("cluster-count recovery", cluster_count_recovery))),
        ("PODAR properties", MINUTE, Box::new(single("PODAR properties", podar_properties))),
        ("ANOVA check", MINUTE, Box::new(single("ANOVA check", anova_check))),
        ("e2e synthetic study", 15 * MINUTE, Box::new(end_to_end as Check)),
        ("determinism", 15 * MINUTE, Box::new(single("determinism", determinism))),
    ];

    let mut failed = vec![];
    let mut ran = 0;
    println!("acceptance criteria");
    for (group, limit, check) in &checks {
        if !wanted(group) {
            continue;
        }
        let start = Instant::now();
        let verdicts = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            vec![(*group, verdict(false, format!("panicked: {msg}")))]
        });
        let elapsed = start.elapsed();
        let in_time = elapsed <= *limit;
        for (name, v) in verdicts {
            ran += 1;
            let pass = v.pass && in_time;
            let timing = if in_time {
                String::new()
            } else {
                format!(" [over time limit of {} s]", limit.as_secs())
            };
            println!(
                "{}  {name:<32} {:>7.1} s  {}{timing}",
                if pass { "PASS" } else { "FAIL" },
                elapsed.as_secs_f64(),
                v.detail
            );
            if !pass {
                failed.push(name);
            }
        }
    }
    println!("{} of {ran} criteria passed", ran - failed.len());
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
