//! Line-delimited scenario and rating-trace files.
//!
//! Scenario files hold one JSON object per frame with keys `t`, `ego` and
//! `participants`; an optional leading `{"meta": {...}}` line carries the
//! scenario name, seed and description. Unknown keys are ignored.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{
    EgoState, Frame, Level, ParticipantKind, ParticipantState, Rating, RatingSource, RatingTrace,
    ScenarioLog, ScenarioMeta,
};
use crate::geometry::Vec2;
use crate::{Error, Result};

#[derive(Serialize, Deserialize)]
struct EgoRecord {
    x: f64,
    y: f64,
    vx: f64,
    vy: f64,
    ax: f64,
    ay: f64,
    yaw: f64,
    #[serde(default)]
    pitch: f64,
    #[serde(default)]
    roll: f64,
}

#[derive(Serialize, Deserialize)]
struct ParticipantRecord {
    id: String,
    kind: ParticipantKind,
    x: f64,
    y: f64,
    vx: f64,
    vy: f64,
}

#[derive(Serialize, Deserialize)]
struct FrameRecord {
    t: f64,
    ego: EgoRecord,
    #[serde(default)]
    participants: Vec<ParticipantRecord>,
}

#[derive(Serialize, Deserialize)]
struct MetaRecord {
    meta: ScenarioMeta,
}

#[derive(Serialize, Deserialize)]
struct RatingRecord {
    rater_id: String,
    scenario: String,
    frame: usize,
    level: u8,
    source: RatingSource,
}

impl From<FrameRecord> for Frame {
    fn from(r: FrameRecord) -> Frame {
        Frame {
            t: r.t,
            ego: EgoState {
                t: r.t,
                pos: Vec2::new(r.ego.x, r.ego.y),
                vel: Vec2::new(r.ego.vx, r.ego.vy),
                acc: Vec2::new(r.ego.ax, r.ego.ay),
                yaw: r.ego.yaw,
                pitch: r.ego.pitch,
                roll: r.ego.roll,
            },
            participants: r
                .participants
                .into_iter()
                .map(|p| ParticipantState {
                    id: p.id,
                    kind: p.kind,
                    pos: Vec2::new(p.x, p.y),
                    vel: Vec2::new(p.vx, p.vy),
                })
                .collect(),
        }
    }
}

impl From<&Frame> for FrameRecord {
    fn from(f: &Frame) -> FrameRecord {
        FrameRecord {
            t: f.t,
            ego: EgoRecord {
                x: f.ego.pos.x,
                y: f.ego.pos.y,
                vx: f.ego.vel.x,
                vy: f.ego.vel.y,
                ax: f.ego.acc.x,
                ay: f.ego.acc.y,
                yaw: f.ego.yaw,
                pitch: f.ego.pitch,
                roll: f.ego.roll,
            },
            participants: f
                .participants
                .iter()
                .map(|p| ParticipantRecord {
                    id: p.id.clone(),
                    kind: p.kind,
                    x: p.pos.x,
                    y: p.pos.y,
                    vx: p.vel.x,
                    vy: p.vel.y,
                })
                .collect(),
        }
    }
}

fn parse_err(line: usize, e: impl std::fmt::Display) -> Error {
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

/// Parses scenario text. `fallback_name` names the scenario when the file
/// has no meta line.
pub fn parse_scenario(text: &str, fallback_name: &str) -> Result<ScenarioLog> {
    let mut meta = None;
    let mut frames = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(line).map_err(|e| parse_err(lineno, e))?;
        let is_meta = value.get("meta").is_some() && value.get("t").is_none();
        if is_meta {
            if meta.is_some() || !frames.is_empty() {
                return Err(parse_err(lineno, "meta record must be the first line"));
            }
            let rec: MetaRecord = serde_json::from_value(value).map_err(|e| parse_err(lineno, e))?;
            meta = Some(rec.meta);
        } else {
            let rec: FrameRecord =
                serde_json::from_value(value).map_err(|e| parse_err(lineno, e))?;
            frames.push(Frame::from(rec));
        }
    }
    let meta = meta.unwrap_or_else(|| ScenarioMeta {
        name: fallback_name.to_string(),
        ..Default::default()
    });
    ScenarioLog::new(meta, frames)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioLog> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("scenario");
    parse_scenario(&text, stem)
}

pub fn scenario_to_string(log: &ScenarioLog) -> String {
    let mut out = serde_json::to_string(&MetaRecord {
        meta: log.meta().clone(),
    })
    .expect("meta serializes");
    out.push('\n');
    for f in log.frames() {
        out.push_str(&serde_json::to_string(&FrameRecord::from(f)).expect("frame serializes"));
        out.push('\n');
    }
    out
}

/// A frame in the scenario-file record form.
pub fn frame_to_json(frame: &Frame) -> Value {
    serde_json::to_value(FrameRecord::from(frame)).expect("frame serializes")
}

pub fn save_scenario(log: &ScenarioLog, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &scenario_to_string(log))
}

pub fn parse_trace(text: &str) -> Result<RatingTrace> {
    let mut header: Option<(String, String, RatingSource)> = None;
    let mut ratings = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let rec: RatingRecord = serde_json::from_str(line).map_err(|e| parse_err(lineno, e))?;
        match &header {
            None => header = Some((rec.rater_id.clone(), rec.scenario.clone(), rec.source)),
            Some((rater, scenario, source)) => {
                if *rater != rec.rater_id || *scenario != rec.scenario || *source != rec.source {
                    return Err(parse_err(
                        lineno,
                        "all records of a trace must share rater_id, scenario and source",
                    ));
                }
            }
        }
        let level = Level::new(rec.level).map_err(|e| parse_err(lineno, e))?;
        ratings.push(Rating {
            frame: rec.frame,
            level,
        });
    }
    let (rater, scenario, source) =
        header.ok_or_else(|| parse_err(0, "rating trace contains no records"))?;
    RatingTrace::new(rater, scenario, ratings, source)
}

pub fn load_trace(path: impl AsRef<Path>) -> Result<RatingTrace> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trace(&text)
}

pub fn trace_to_string(trace: &RatingTrace) -> String {
    let mut out = String::new();
    for r in trace.ratings() {
        let rec = RatingRecord {
            rater_id: trace.rater_id().to_string(),
            scenario: trace.scenario_name().to_string(),
            frame: r.frame,
            level: r.level.get(),
            source: trace.source(),
        };
        out.push_str(&serde_json::to_string(&rec).expect("rating serializes"));
        out.push('\n');
    }
    out
}

pub fn save_trace(trace: &RatingTrace, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &trace_to_string(trace))
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}
