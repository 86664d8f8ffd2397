//! Environmental risk features from the PODAR risk field.
//!
//! Each participant within the detection radius gets a risk value
//! `G · ω_D(distance) · ω_T(ttc)`, where the collision potential
//! `G = ½ (M_ego + M) · V_t · |V_t|` grows with the virtual masses and the
//! signed square of the closing speed. Participants are binned into four
//! viewpoint sectors around the ego heading; the per-sector maximum risk and
//! two viewpoint-weighted participant counts form the six-dimensional
//! [`RiskFeatures`] vector for a frame.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::wrap_angle;
use crate::scenario::{EgoState, Frame, ParticipantKind, ParticipantState, ScenarioLog};
use crate::{Error, Result};

/// Separation below which two positions are treated as corrupt data.
pub const MIN_SEPARATION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KindMasses {
    pub vehicle: f64,
    pub pedestrian: f64,
    pub obstacle: f64,
}

impl Default for KindMasses {
    fn default() -> Self {
        KindMasses {
            vehicle: 1.5,
            pedestrian: 0.07,
            obstacle: 1.0,
        }
    }
}

impl KindMasses {
    pub fn of(&self, kind: ParticipantKind) -> f64 {
        match kind {
            ParticipantKind::Vehicle => self.vehicle,
            ParticipantKind::Pedestrian => self.pedestrian,
            ParticipantKind::Obstacle => self.obstacle,
        }
    }
}

/// PODAR parameters. Defaults: ego mass 1.5, vehicle 1.5, pedestrian 0.07,
/// obstacle 1.0 (virtual-mass units), distance half-life 20 m, time
/// half-life 2 s, detection radius 60 m, front and rear half-angles 45°.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PodarConfig {
    pub mass_ego: f64,
    pub mass: KindMasses,
    /// Distance at which the distance decay halves the risk, meters.
    pub d_half: f64,
    /// Time-to-collision at which the time decay halves the risk, seconds.
    pub t_half: f64,
    pub detect_radius: f64,
    /// Half-angle of the front sector, degrees.
    pub front_halfangle: f64,
    /// Half-angle of the rear sector, degrees.
    pub rear_halfangle: f64,
}

impl Default for PodarConfig {
    fn default() -> Self {
        PodarConfig {
            mass_ego: 1.5,
            mass: KindMasses::default(),
            d_half: 20.0,
            t_half: 2.0,
            detect_radius: 60.0,
            front_halfangle: 45.0,
            rear_halfangle: 45.0,
        }
    }
}

impl PodarConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass_ego", self.mass_ego),
            ("mass.vehicle", self.mass.vehicle),
            ("mass.pedestrian", self.mass.pedestrian),
            ("mass.obstacle", self.mass.obstacle),
            ("d_half", self.d_half),
            ("t_half", self.t_half),
            ("detect_radius", self.detect_radius),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("podar {name} = {v} must be > 0")));
            }
        }
        for (name, v) in [
            ("front_halfangle", self.front_halfangle),
            ("rear_halfangle", self.rear_halfangle),
        ] {
            if !(v > 0.0 && v < 90.0) {
                return Err(Error::Config(format!("podar {name} = {v} must lie in (0, 90)")));
            }
        }
        Ok(())
    }

    /// Parses a key-value config file (TOML syntax, e.g. `d_half = 20.0`,
    /// `mass.pedestrian = 0.07`). Missing keys keep their defaults.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: PodarConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("podar config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Same configuration with every virtual mass multiplied by `factor`.
    pub fn scaled_masses(&self, factor: f64) -> Self {
        PodarConfig {
            mass_ego: self.mass_ego * factor,
            mass: KindMasses {
                vehicle: self.mass.vehicle * factor,
                pedestrian: self.mass.pedestrian * factor,
                obstacle: self.mass.obstacle * factor,
            },
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeKinematics {
    pub distance: f64,
    /// Bearing of the participant in the ego yaw frame, (−π, π], positive
    /// counterclockwise (to the left).
    pub bearing: f64,
    /// Rate at which the gap shrinks, m/s; negative when receding.
    pub closing_speed: f64,
    /// Time to collision, `+∞` unless closing.
    pub ttc: f64,
}

impl RelativeKinematics {
    /// Builds kinematics from distance, bearing and closing speed, deriving
    /// the time to collision.
    pub fn new(distance: f64, bearing: f64, closing_speed: f64) -> Self {
        let ttc = if closing_speed > 0.0 {
            distance / closing_speed
        } else {
            f64::INFINITY
        };
        RelativeKinematics {
            distance,
            bearing,
            closing_speed,
            ttc,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Viewpoint {
    Front,
    Left,
    Right,
    Rear,
}

impl Viewpoint {
    pub const ALL: [Viewpoint; 4] = [Viewpoint::Front, Viewpoint::Left, Viewpoint::Right, Viewpoint::Rear];

    /// Weight of one participant in this sector for the weighted counts.
    pub fn weight(self) -> f64 {
        match self {
            Viewpoint::Front => 1.0,
            Viewpoint::Left | Viewpoint::Right => 0.6,
            Viewpoint::Rear => 0.3,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Category C feature vector of one frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RiskFeatures {
    pub risk_front: f64,
    pub risk_left: f64,
    pub risk_right: f64,
    pub risk_rear: f64,
    pub count_vehicles_w: f64,
    pub count_pedestrians_w: f64,
}

impl RiskFeatures {
    pub const NAMES: [&'static str; 6] = [
        "risk_front",
        "risk_left",
        "risk_right",
        "risk_rear",
        "count_vehicles_w",
        "count_pedestrians_w",
    ];

    pub fn to_array(&self) -> [f64; 6] {
        [
            self.risk_front,
            self.risk_left,
            self.risk_right,
            self.risk_rear,
            self.count_vehicles_w,
            self.count_pedestrians_w,
        ]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        RiskFeatures {
            risk_front: a[0],
            risk_left: a[1],
            risk_right: a[2],
            risk_rear: a[3],
            count_vehicles_w: a[4],
            count_pedestrians_w: a[5],
        }
    }

    pub fn max_risk(&self) -> f64 {
        self.risk_front
            .max(self.risk_left)
            .max(self.risk_right)
            .max(self.risk_rear)
    }
}

pub fn relative_kinematics(ego: &EgoState, p: &ParticipantState) -> Result<RelativeKinematics> {
    let offset = p.pos - ego.pos;
    let distance = offset.norm();
    if !(distance >= MIN_SEPARATION) {
        return Err(Error::Degenerate {
            frame: 0,
            participant: p.id.clone(),
            distance,
        });
    }
    let bearing = wrap_angle(offset.y.atan2(offset.x) - ego.yaw);
    let rel_vel = p.vel - ego.vel;
    let closing_speed = -offset.dot(rel_vel) / distance;
    Ok(RelativeKinematics::new(distance, bearing, closing_speed))
}

/// Collision potential `½ (M_ego + M_kind) · V_t · |V_t|`, clamped at zero
/// for receding participants.
pub fn potential_collision(rel: &RelativeKinematics, cfg: &PodarConfig, kind: ParticipantKind) -> f64 {
    let v = rel.closing_speed;
    let g = 0.5 * (cfg.mass_ego + cfg.mass.of(kind)) * v * v.abs();
    g.max(0.0)
}

/// `2^(−d / d_half)`
pub fn distance_decay(distance: f64, cfg: &PodarConfig) -> f64 {
    (-distance / cfg.d_half).exp2()
}

/// `2^(−τ / t_half)`, zero for an infinite time to collision.
pub fn time_decay(ttc: f64, cfg: &PodarConfig) -> f64 {
    if ttc.is_finite() {
        (-ttc / cfg.t_half).exp2()
    } else {
        0.0
    }
}

pub fn podar(rel: &RelativeKinematics, cfg: &PodarConfig, kind: ParticipantKind) -> f64 {
    if rel.distance > cfg.detect_radius {
        return 0.0;
    }
    let g = potential_collision(rel, cfg, kind);
    if g == 0.0 {
        return 0.0;
    }
    g * distance_decay(rel.distance, cfg) * time_decay(rel.ttc, cfg)
}

/// Sector of a bearing. Boundary bearings go to the higher-weight sector
/// (front over left/right over rear).
pub fn viewpoint_of(bearing: f64, cfg: &PodarConfig) -> Viewpoint {
    let b = bearing.abs();
    if b <= cfg.front_halfangle.to_radians() {
        Viewpoint::Front
    } else if b > PI - cfg.rear_halfangle.to_radians() {
        Viewpoint::Rear
    } else if bearing > 0.0 {
        Viewpoint::Left
    } else {
        Viewpoint::Right
    }
}

/// Per-sector maximum PODAR as `[front, left, right, rear]`.
pub fn directional_risks(frame: &Frame, cfg: &PodarConfig) -> Result<[f64; 4]> {
    let mut risks = [0.0f64; 4];
    for p in &frame.participants {
        let rel = relative_kinematics(&frame.ego, p)?;
        let risk = podar(&rel, cfg, p.kind);
        let slot = &mut risks[viewpoint_of(rel.bearing, cfg).index()];
        *slot = slot.max(risk);
    }
    Ok(risks)
}

/// Viewpoint-weighted counts `(vehicles, pedestrians)` of detected
/// participants. Obstacles count as vehicles.
pub fn weighted_counts(frame: &Frame, cfg: &PodarConfig) -> Result<(f64, f64)> {
    // integer tallies per sector keep the result independent of participant order
    let mut vehicles = [0u32; 4];
    let mut pedestrians = [0u32; 4];
    for p in &frame.participants {
        let rel = relative_kinematics(&frame.ego, p)?;
        if rel.distance > cfg.detect_radius {
            continue;
        }
        let sector = viewpoint_of(rel.bearing, cfg).index();
        match p.kind {
            ParticipantKind::Pedestrian => pedestrians[sector] += 1,
            ParticipantKind::Vehicle | ParticipantKind::Obstacle => vehicles[sector] += 1,
        }
    }
    let weigh = |tally: [u32; 4]| {
        Viewpoint::ALL
            .iter()
            .map(|v| tally[v.index()] as f64 * v.weight())
            .sum::<f64>()
    };
    Ok((weigh(vehicles), weigh(pedestrians)))
}

pub fn frame_features(frame: &Frame, cfg: &PodarConfig) -> Result<RiskFeatures> {
    let [front, left, right, rear] = directional_risks(frame, cfg)?;
    let (vehicles, pedestrians) = weighted_counts(frame, cfg)?;
    Ok(RiskFeatures {
        risk_front: front,
        risk_left: left,
        risk_right: right,
        risk_rear: rear,
        count_vehicles_w: vehicles,
        count_pedestrians_w: pedestrians,
    })
}

/// One feature row per frame, in frame order.
pub fn extract_features(log: &ScenarioLog, cfg: &PodarConfig) -> Result<Vec<RiskFeatures>> {
    cfg.validate()?;
    log.frames()
        .iter()
        .enumerate()
        .map(|(i, f)| frame_features(f, cfg).map_err(|e| e.at_frame(i)))
        .collect()
}

/// Parallel per-frame extraction; bit-identical to [`extract_features`].
pub fn extract_features_par(log: &ScenarioLog, cfg: &PodarConfig) -> Result<Vec<RiskFeatures>> {
    cfg.validate()?;
    log.frames()
        .par_iter()
        .enumerate()
        .map(|(i, f)| frame_features(f, cfg).map_err(|e| e.at_frame(i)))
        .collect()
}

#[derive(Serialize, Deserialize)]
struct FeatureRow {
    frame: usize,
    #[serde(flatten)]
    features: RiskFeatures,
}

pub fn features_to_string(features: &[RiskFeatures]) -> String {
    let mut out = String::new();
    for (frame, f) in features.iter().enumerate() {
        let row = FeatureRow { frame, features: *f };
        out.push_str(&serde_json::to_string(&row).expect("feature row serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_features(text: &str) -> Result<Vec<RiskFeatures>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: FeatureRow = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        if row.frame != out.len() {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("expected frame {}, found {}", out.len(), row.frame),
            });
        }
        out.push(row.features);
    }
    Ok(out)
}

pub fn save_features(features: &[RiskFeatures], path: impl AsRef<Path>) -> Result<()> {
    crate::scenario::write_file(path.as_ref(), &features_to_string(features))
}

pub fn load_features(path: impl AsRef<Path>) -> Result<Vec<RiskFeatures>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_features(&text)
}
