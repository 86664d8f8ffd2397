//! Driving-scenario logs, rating traces and their validation.
//!
//! A [`ScenarioLog`] is an ordered 10 Hz sequence of [`Frame`]s; each frame
//! holds the ego state (position, velocity, acceleration, Euler angles) and
//! the surrounding participants. Logs and traces are immutable once built and
//! every constructor validates its invariants.

mod generate;
mod io;
mod merge;
mod oracle;

use std::collections::HashSet;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;
use crate::{Error, Result, FRAME_DT};

pub use generate::{generate_synthetic, GenParams, Template};
pub use io::{
    frame_to_json, load_scenario, load_trace, parse_scenario, parse_trace, save_scenario, save_trace,
    scenario_to_string, trace_to_string,
};
pub use merge::{merge_ratings, LabelRow, LabeledDataset};
pub use oracle::{oracle_label, OracleConfig};
pub(crate) use io::write_file;

/// Allowed deviation of the inter-frame spacing from [`FRAME_DT`].
pub const SPACING_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct EgoState {
    pub t: f64,
    pub pos: Vec2,
    pub vel: Vec2,
    pub acc: Vec2,
    /// Heading in (−π, π], counterclockwise from the world +x axis.
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

impl EgoState {
    pub fn speed(&self) -> f64 {
        self.vel.norm()
    }

    fn validate(&self) -> Result<()> {
        if !(self.t.is_finite() && self.t >= 0.0) {
            return Err(Error::Validation(format!("ego time {} must be finite and >= 0", self.t)));
        }
        let finite = self.pos.is_finite()
            && self.vel.is_finite()
            && self.acc.is_finite()
            && self.yaw.is_finite()
            && self.pitch.is_finite()
            && self.roll.is_finite();
        if !finite {
            return Err(Error::Validation(format!("non-finite ego state at t={}", self.t)));
        }
        if !(self.yaw > -PI && self.yaw <= PI) {
            return Err(Error::Validation(format!("yaw {} outside (-pi, pi]", self.yaw)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParticipantKind {
    Vehicle,
    Pedestrian,
    Obstacle,
}

impl ParticipantKind {
    pub const ALL: [ParticipantKind; 3] = [
        ParticipantKind::Vehicle,
        ParticipantKind::Pedestrian,
        ParticipantKind::Obstacle,
    ];
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticipantState {
    pub id: String,
    pub kind: ParticipantKind,
    pub pos: Vec2,
    pub vel: Vec2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub ego: EgoState,
    pub participants: Vec<ParticipantState>,
}

impl Frame {
    fn validate(&self) -> Result<()> {
        self.ego.validate()?;
        let mut seen = HashSet::with_capacity(self.participants.len());
        for p in &self.participants {
            if !(p.pos.is_finite() && p.vel.is_finite()) {
                return Err(Error::Validation(format!(
                    "participant {} has non-finite state at t={}",
                    p.id, self.t
                )));
            }
            if !seen.insert(p.id.as_str()) {
                return Err(Error::Validation(format!(
                    "duplicate participant id {:?} at t={}",
                    p.id, self.t
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScenarioMeta {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub description: String,
}

/// A validated 10 Hz driving log.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioLog {
    meta: ScenarioMeta,
    frames: Vec<Frame>,
}

impl ScenarioLog {
    pub fn new(meta: ScenarioMeta, mut frames: Vec<Frame>) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::Validation("scenario has no frames".into()));
        }
        for (i, f) in frames.iter_mut().enumerate() {
            f.ego.t = f.t;
            f.validate()
                .map_err(|e| Error::Validation(format!("frame {i}: {e}")))?;
        }
        for (i, w) in frames.windows(2).enumerate() {
            let dt = w[1].t - w[0].t;
            if dt <= 0.0 {
                return Err(Error::Validation(format!(
                    "timestamps not strictly increasing at frame {}: {} -> {}",
                    i + 1,
                    w[0].t,
                    w[1].t
                )));
            }
            if (dt - FRAME_DT).abs() > SPACING_TOLERANCE {
                return Err(Error::Validation(format!(
                    "frame spacing {dt:.4} s at frame {} is not {FRAME_DT} s",
                    i + 1
                )));
            }
        }
        Ok(ScenarioLog { meta, frames })
    }

    pub fn meta(&self) -> &ScenarioMeta {
        &self.meta
    }

    pub fn name(&self) -> &str {
        &self.meta.name
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Perceived-risk level in `0..=4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Level(u8);

impl Level {
    pub const MAX: u8 = 4;

    pub fn new(level: u8) -> Result<Self> {
        if level <= Self::MAX {
            Ok(Level(level))
        } else {
            Err(Error::Range(format!("risk level {level} outside 0..=4")))
        }
    }

    /// Clamps any integer into the valid level range.
    pub fn saturating(level: i64) -> Self {
        Level(level.clamp(0, Self::MAX as i64) as u8)
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl TryFrom<u8> for Level {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        Level::new(v)
    }
}

impl From<Level> for u8 {
    fn from(l: Level) -> u8 {
        l.0
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RatingSource {
    Human,
    Oracle,
}

impl fmt::Display for RatingSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RatingSource::Human => "human",
            RatingSource::Oracle => "oracle",
        })
    }
}

impl FromStr for RatingSource {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "human" => Ok(RatingSource::Human),
            "oracle" => Ok(RatingSource::Oracle),
            other => Err(Error::Validation(format!("unknown rating source {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rating {
    pub frame: usize,
    pub level: Level,
}

/// Frame-aligned risk ratings from one rater for one scenario.
///
/// Ratings are kept sorted by frame index, at most one per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingTrace {
    rater_id: String,
    scenario_name: String,
    ratings: Vec<Rating>,
    source: RatingSource,
}

impl RatingTrace {
    pub fn new(
        rater_id: impl Into<String>,
        scenario_name: impl Into<String>,
        mut ratings: Vec<Rating>,
        source: RatingSource,
    ) -> Result<Self> {
        let rater_id = rater_id.into();
        if rater_id.is_empty() {
            return Err(Error::Validation("rater_id must not be empty".into()));
        }
        ratings.sort_by_key(|r| r.frame);
        if let Some(w) = ratings.windows(2).find(|w| w[0].frame == w[1].frame) {
            return Err(Error::Validation(format!(
                "rater {rater_id} has more than one rating for frame {}",
                w[0].frame
            )));
        }
        Ok(RatingTrace {
            rater_id,
            scenario_name: scenario_name.into(),
            ratings,
            source,
        })
    }

    pub fn rater_id(&self) -> &str {
        &self.rater_id
    }

    pub fn scenario_name(&self) -> &str {
        &self.scenario_name
    }

    pub fn ratings(&self) -> &[Rating] {
        &self.ratings
    }

    pub fn source(&self) -> RatingSource {
        self.source
    }

    /// Checks that the trace refers to `log` and every frame index is in range.
    pub fn check_against(&self, log: &ScenarioLog) -> Result<()> {
        if self.scenario_name != log.name() {
            return Err(Error::Mismatch(format!(
                "trace of rater {} references scenario {:?}, not {:?}",
                self.rater_id,
                self.scenario_name,
                log.name()
            )));
        }
        if let Some(r) = self.ratings.iter().find(|r| r.frame >= log.len()) {
            return Err(Error::Mismatch(format!(
                "rater {} rated frame {} but scenario {:?} has {} frames",
                self.rater_id,
                r.frame,
                log.name(),
                log.len()
            )));
        }
        Ok(())
    }
}
