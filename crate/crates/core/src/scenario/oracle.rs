use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Level, Rating, RatingSource, RatingTrace, ScenarioLog};
use crate::riskfield::{directional_risks, PodarConfig};
use crate::{Error, Result};

/// Synthetic rater: quantized maximum directional PODAR, shifted by a
/// per-group bias and perturbed by adjacent-level label noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub rater_id: String,
    /// Strictly increasing PODAR thresholds; the level is the number of
    /// thresholds the frame's maximum directional risk reaches.
    pub thresholds: [f64; 4],
    /// Probability of moving a label to a uniformly chosen adjacent level.
    pub noise: f64,
    /// Level offset in {−1, 0, +1}.
    pub bias: i8,
    #[serde(default)]
    pub podar: PodarConfig,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            rater_id: "oracle".into(),
            thresholds: [0.5, 4.0, 12.0, 30.0],
            noise: 0.0,
            bias: 0,
            podar: PodarConfig::default(),
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        let t = &self.thresholds;
        if t.iter().any(|v| !v.is_finite()) || !t.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config(format!(
                "oracle thresholds {t:?} must be finite and strictly increasing"
            )));
        }
        if !(0.0..0.5).contains(&self.noise) {
            return Err(Error::Config(format!("oracle noise {} outside [0, 0.5)", self.noise)));
        }
        if !(-1..=1).contains(&self.bias) {
            return Err(Error::Config(format!("oracle bias {} outside {{-1, 0, 1}}", self.bias)));
        }
        self.podar.validate()
    }

    /// Number of thresholds reached by `risk`.
    pub fn quantize(&self, risk: f64) -> u8 {
        self.thresholds.iter().filter(|&&t| risk >= t).count() as u8
    }
}

/// Labels every frame of `log` with the oracle's level.
pub fn oracle_label(log: &ScenarioLog, cfg: &OracleConfig, seed: u64) -> Result<RatingTrace> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ratings = Vec::with_capacity(log.len());
    for (i, frame) in log.frames().iter().enumerate() {
        let risks = directional_risks(frame, &cfg.podar).map_err(|e| e.at_frame(i))?;
        let max = risks.iter().copied().fold(0.0, f64::max);
        let mut level = (cfg.quantize(max) as i64 + cfg.bias as i64).clamp(0, 4);
        // draw unconditionally so the noise stream does not depend on labels
        let flip = rng.gen::<f64>() < cfg.noise;
        let up = rng.gen_bool(0.5);
        if flip {
            level = match level {
                0 => 1,
                4 => 3,
                l if up => l + 1,
                l => l - 1,
            };
        }
        ratings.push(Rating {
            frame: i,
            level: Level::saturating(level),
        });
    }
    RatingTrace::new(cfg.rater_id.clone(), log.name(), ratings, RatingSource::Oracle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{generate_synthetic, Template};

    #[test]
    fn empty_environment_is_all_zero() {
        let p = Template::StraightCruise.default_params();
        let log = generate_synthetic(Template::StraightCruise, &p, 1).unwrap();
        let trace = oracle_label(&log, &OracleConfig::default(), 3).unwrap();
        assert_eq!(trace.ratings().len(), log.len());
        assert!(trace.ratings().iter().all(|r| r.level.get() == 0));
        assert_eq!(trace.source(), RatingSource::Oracle);
    }

    #[test]
    fn bias_shifts_by_one_clamped() {
        let log = generate_synthetic(Template::LeadBrake, &Template::LeadBrake.default_params(), 7).unwrap();
        let base = oracle_label(&log, &OracleConfig::default(), 1).unwrap();
        let cfg = OracleConfig {
            bias: 1,
            ..OracleConfig::default()
        };
        let shifted = oracle_label(&log, &cfg, 1).unwrap();
        for (a, b) in base.ratings().iter().zip(shifted.ratings()) {
            assert_eq!(b.level.get(), (a.level.get() + 1).min(4));
        }
    }

    #[test]
    fn rejects_bad_config() {
        let log = generate_synthetic(Template::StraightCruise, &Template::StraightCruise.default_params(), 1).unwrap();
        for cfg in [
            OracleConfig {
                thresholds: [1.0, 3.0, 2.0, 4.0],
                ..Default::default()
            },
            OracleConfig {
                noise: 0.5,
                ..Default::default()
            },
            OracleConfig {
                bias: 2,
                ..Default::default()
            },
        ] {
            assert!(matches!(oracle_label(&log, &cfg, 0), Err(Error::Config(_))));
        }
    }

    #[test]
    fn noise_moves_to_adjacent_levels_only() {
        let log = generate_synthetic(Template::MixedUrban, &Template::MixedUrban.default_params(), 4).unwrap();
        let clean = oracle_label(&log, &OracleConfig::default(), 9).unwrap();
        let noisy_cfg = OracleConfig {
            noise: 0.3,
            ..Default::default()
        };
        let noisy = oracle_label(&log, &noisy_cfg, 9).unwrap();
        let mut changed = 0;
        for (a, b) in clean.ratings().iter().zip(noisy.ratings()) {
            let d = (a.level.get() as i32 - b.level.get() as i32).abs();
            assert!(d <= 1);
            changed += d;
        }
        assert!(changed > 0);
    }
}
