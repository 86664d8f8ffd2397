use super::model::WindowSample;
use super::params::EgoChannels;
use crate::geometry::wrap_angle;
use crate::riskfield::RiskFeatures;
use crate::scenario::{Level, ScenarioLog};
use crate::{Error, Result, FRAME_DT};

/// Per-frame ego input rows for one scenario.
pub fn ego_rows(log: &ScenarioLog, channels: EgoChannels) -> Vec<Vec<f64>> {
    let frames = log.frames();
    frames
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let e = &f.ego;
            match channels {
                EgoChannels::Reduced => {
                    let yaw_rate = if k == 0 {
                        0.0
                    } else {
                        let prev = &frames[k - 1].ego;
                        wrap_angle(e.yaw - prev.yaw) / (e.t - prev.t).max(FRAME_DT * 1e-3)
                    };
                    vec![e.vel.x, e.vel.y, e.acc.x, e.acc.y, yaw_rate, e.speed()]
                }
                EgoChannels::Raw => vec![
                    e.pos.x, e.pos.y, e.vel.x, e.vel.y, e.acc.x, e.acc.y, e.yaw, e.pitch, e.roll,
                ],
            }
        })
        .collect()
}

/// Sliding windows (stride 1) ending at every labeled frame with a full history.
/// The label is the rating in force at the window's final frame.
pub fn build_windows(
    ego: &[Vec<f64>],
    env: &[RiskFeatures],
    labels: &[Option<Level>],
    window: usize,
) -> Result<Vec<WindowSample>> {
    if ego.len() != env.len() || ego.len() != labels.len() {
        return Err(Error::Mismatch(format!(
            "ego ({}), feature ({}) and label ({}) frame counts differ",
            ego.len(),
            env.len(),
            labels.len()
        )));
    }
    if window == 0 {
        return Err(Error::Config("window must be >= 1".into()));
    }
    let env_rows: Vec<Vec<f64>> = env.iter().map(|f| f.to_array().to_vec()).collect();
    Ok((window.saturating_sub(1)..ego.len())
        .filter_map(|end| {
            labels[end].map(|label| WindowSample {
                ego: ego[end + 1 - window..=end].to_vec(),
                env: env_rows[end + 1 - window..=end].to_vec(),
                label,
            })
        })
        .collect())
}
