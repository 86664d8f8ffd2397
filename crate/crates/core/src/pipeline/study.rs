//! Synthetic rater study: trait-blob driver rosters, per-group oracle
//! raters, and assembly of labeled window datasets.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::clustering::{DriverProfile, DrivingStyle, Gender};
use crate::evaluation::POOLED_GROUP;
use crate::network::{build_windows, ego_rows, EgoChannels, WindowSample};
use crate::riskfield::{PodarConfig, RiskFeatures};
use crate::scenario::{merge_ratings, oracle_label, OracleConfig, RatingTrace, ScenarioLog};
use crate::{Error, Result};

/// One population of synthetic raters: a trait blob and a rating profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaterGroup {
    pub name: String,
    pub drivers: usize,
    pub gender: Gender,
    /// Mean and standard deviation, years.
    pub age: [f64; 2],
    pub experience: [f64; 2],
    pub style: DrivingStyle,
    /// Level offset applied by the oracle.
    pub bias: i8,
    pub noise: f64,
    /// Multiplies the base oracle thresholds.
    #[serde(default = "one")]
    pub threshold_scale: f64,
}

fn one() -> f64 {
    1.0
}

impl RaterGroup {
    pub fn validate(&self) -> Result<()> {
        if self.drivers == 0 {
            return Err(Error::Config(format!("group {} has no drivers", self.name)));
        }
        if !(self.threshold_scale.is_finite() && self.threshold_scale > 0.0) {
            return Err(Error::Config(format!(
                "group {}: threshold_scale must be > 0",
                self.name
            )));
        }
        if self.age[1] < 0.0 || self.experience[1] < 0.0 {
            return Err(Error::Config(format!("group {}: negative spread", self.name)));
        }
        Ok(())
    }

    pub fn oracle(&self, rater_id: &str, base_thresholds: [f64; 4], podar: &PodarConfig) -> OracleConfig {
        OracleConfig {
            rater_id: rater_id.to_string(),
            thresholds: base_thresholds.map(|t| t * self.threshold_scale),
            noise: self.noise,
            bias: self.bias,
            podar: podar.clone(),
        }
    }
}

/// Four well-separated trait blobs with distinct rating behaviour.
pub fn default_groups() -> Vec<RaterGroup> {
    let g = |name: &str, gender, age, experience, style, bias, noise, threshold_scale| RaterGroup {
        name: name.to_string(),
        drivers: 3,
        gender,
        age,
        experience,
        style,
        bias,
        noise,
        threshold_scale,
    };
    vec![
        g("novice", Gender::Female, [23.0, 1.5], [2.0, 1.0], DrivingStyle::Conservative, 1, 0.05, 1.0),
        g("assertive", Gender::Male, [30.0, 2.0], [10.0, 2.0], DrivingStyle::Aggressive, 0, 0.05, 1.4),
        g("experienced", Gender::Female, [46.0, 2.5], [25.0, 2.5], DrivingStyle::Moderate, 0, 0.02, 1.0),
        g("senior", Gender::Male, [62.0, 2.5], [40.0, 3.0], DrivingStyle::Conservative, 0, 0.15, 0.8),
    ]
}

/// A synthetic driver and the index of the group it was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct RosterEntry {
    pub profile: DriverProfile,
    pub group: usize,
}

/// Draws `drivers` profiles around each group's trait center.
/// Driver ids are `d000`, `d001`, ... in group order.
pub fn synthetic_roster(groups: &[RaterGroup], seed: u64) -> Result<Vec<RosterEntry>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (gi, g) in groups.iter().enumerate() {
        g.validate()?;
        let age = Normal::new(g.age[0], g.age[1]).map_err(|e| Error::Config(e.to_string()))?;
        let exp = Normal::new(g.experience[0], g.experience[1]).map_err(|e| Error::Config(e.to_string()))?;
        for _ in 0..g.drivers {
            let a = round1(age.sample(&mut rng).max(16.0));
            let e = round1(exp.sample(&mut rng)).clamp(0.0, a - 15.0);
            out.push(RosterEntry {
                profile: DriverProfile {
                    driver_id: format!("d{:03}", out.len()),
                    gender: g.gender,
                    age: a,
                    experience: e,
                    style: g.style,
                },
                group: gi,
            });
        }
    }
    Ok(out)
}

fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

/// Stable 64-bit seed for a named stream (FNV-1a over the parts, mixed with `base`).
pub fn derive_seed(base: u64, parts: &[&str]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ base.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for p in parts {
        for b in p.bytes().chain(std::iter::once(0xff)) {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// Oracle traces of every driver on one scenario, in roster order.
pub fn rate_scenario(
    log: &ScenarioLog,
    roster: &[RosterEntry],
    groups: &[RaterGroup],
    base_thresholds: [f64; 4],
    podar: &PodarConfig,
    seed: u64,
) -> Result<Vec<RatingTrace>> {
    roster
        .iter()
        .map(|r| {
            let id = &r.profile.driver_id;
            let cfg = groups[r.group].oracle(id, base_thresholds, podar);
            oracle_label(log, &cfg, derive_seed(seed, &[log.name(), id]))
        })
        .collect()
}

/// Everything needed to build training windows for one scenario.
#[derive(Debug, Clone)]
pub struct ScenarioData {
    pub log: ScenarioLog,
    pub features: Vec<RiskFeatures>,
    pub traces: Vec<RatingTrace>,
}

/// Labeled windows per group, keyed by group name, plus the pooled set under
/// [`POOLED_GROUP`]. Scenarios and raters are visited in the given order and
/// windows never span two scenarios.
pub fn group_datasets(
    data: &[ScenarioData],
    category_of: &BTreeMap<String, String>,
    window: usize,
    channels: EgoChannels,
) -> Result<BTreeMap<String, Vec<WindowSample>>> {
    let mut out: BTreeMap<String, Vec<WindowSample>> = BTreeMap::new();
    out.insert(POOLED_GROUP.to_string(), Vec::new());
    for d in data {
        if d.features.len() != d.log.len() {
            return Err(Error::Mismatch(format!(
                "scenario {} has {} frames but {} feature rows",
                d.log.name(),
                d.log.len(),
                d.features.len()
            )));
        }
        let ego = ego_rows(&d.log, channels);
        let merged = merge_ratings(&d.log, &d.traces)?;
        for (rater, column) in &merged.columns {
            let windows = build_windows(&ego, &d.features, column, window)?;
            if let Some(cat) = category_of.get(rater) {
                out.entry(cat.clone()).or_default().extend(windows.iter().cloned());
            }
            out.get_mut(POOLED_GROUP).expect("pooled entry").extend(windows);
        }
    }
    Ok(out)
}

/// Display name of cluster `k` (zero-based).
pub fn category_name(k: usize) -> String {
    format!("Category{}", k + 1)
}
