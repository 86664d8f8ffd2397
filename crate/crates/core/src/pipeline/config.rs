use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::study::{default_groups, RaterGroup};
use crate::network::{Arch, TrainConfig};
use crate::riskfield::PodarConfig;
use crate::scenario::{GenParams, Template};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateConfig {
    pub templates: Vec<String>,
    /// Scenario seeds per template are `seed + i` for `i` in `0..scenarios_per_template`.
    pub scenarios_per_template: u64,
    /// Replaces every template's default duration when set.
    pub duration: Option<f64>,
    /// Extra participants added to every template's default traffic.
    pub extra_traffic: u32,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig {
            templates: Template::ALL.iter().map(|t| t.as_str().to_string()).collect(),
            scenarios_per_template: 4,
            duration: None,
            extra_traffic: 0,
        }
    }
}

impl GenerateConfig {
    pub fn templates(&self) -> Result<Vec<Template>> {
        if self.templates.is_empty() {
            return Err(Error::Config("no templates configured".into()));
        }
        self.templates.iter().map(|t| t.parse()).collect()
    }

    pub fn params(&self, t: Template) -> Result<GenParams> {
        let mut p = t.default_params();
        if let Some(d) = self.duration {
            p.duration = d;
        }
        p.traffic += self.extra_traffic;
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSettings {
    /// Base PODAR thresholds, scaled per rater group.
    pub thresholds: [f64; 4],
}

impl Default for OracleSettings {
    fn default() -> Self {
        OracleSettings {
            thresholds: [0.5, 4.0, 12.0, 30.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterSettings {
    pub p_max: usize,
    pub seeds_per_p: usize,
    pub outlier_sigma: f64,
}

impl Default for ClusterSettings {
    fn default() -> Self {
        ClusterSettings {
            p_max: 8,
            seeds_per_p: 10,
            outlier_sigma: crate::clustering::DEFAULT_OUTLIER_SIGMA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSettings {
    /// Architectures trained by `train`; each gets a pooled and per-category model.
    pub models: Vec<Arch>,
    #[serde(flatten)]
    pub config: TrainConfig,
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings {
            models: Arch::ALL.to_vec(),
            config: TrainConfig {
                model: crate::network::ModelConfig {
                    window: 10,
                    hidden: 16,
                    attn: 16,
                    ..Default::default()
                },
                lr: 5e-3,
                batch: 64,
                epochs: 12,
                ..Default::default()
            },
        }
    }
}

/// Everything a pipeline run needs; loaded from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Workspace directory for all outputs.
    pub out: PathBuf,
    pub generate: GenerateConfig,
    pub podar: PodarConfig,
    pub oracle: OracleSettings,
    pub groups: Vec<RaterGroup>,
    pub cluster: ClusterSettings,
    pub train: TrainSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out: PathBuf::from("out"),
            generate: GenerateConfig::default(),
            podar: PodarConfig::default(),
            oracle: OracleSettings::default(),
            groups: default_groups(),
            cluster: ClusterSettings::default(),
            train: TrainSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        for t in self.generate.templates()? {
            self.generate.params(t)?;
        }
        if self.generate.scenarios_per_template == 0 {
            return Err(Error::Config("scenarios_per_template must be >= 1".into()));
        }
        self.podar.validate()?;
        let t = self.oracle.thresholds;
        if t.iter().any(|v| !v.is_finite()) || !t.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config(format!("oracle thresholds {t:?} must increase strictly")));
        }
        if self.groups.is_empty() {
            return Err(Error::Config("at least one rater group is required".into()));
        }
        for g in &self.groups {
            g.validate()?;
            g.oracle("check", t, &self.podar).validate()?;
        }
        if self.cluster.p_max < 1 || self.cluster.seeds_per_p < 1 {
            return Err(Error::Config("cluster p_max and seeds_per_p must be >= 1".into()));
        }
        if self.train.models.is_empty() {
            return Err(Error::Config("train.models is empty".into()));
        }
        self.train.config.validate()
    }

    /// Training configuration with the run seed applied.
    pub fn train_config(&self, arch: Arch) -> TrainConfig {
        let mut c = self.train.config.clone();
        c.model.arch = arch;
        c.seed = self.seed;
        c
    }
}
