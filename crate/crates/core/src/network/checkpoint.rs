use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{InputScaler, Model};
use super::params::{ModelConfig, ModelParams};
use super::tensor::Tensor;
use crate::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;
pub const SUPPORTED_VERSIONS: &[u32] = &[CHECKPOINT_VERSION];

#[derive(Serialize, Deserialize)]
struct NamedTensor {
    name: String,
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format_version: u32,
    config: ModelConfig,
    seed: u64,
    scaler: InputScaler,
    tensors: Vec<NamedTensor>,
}

#[derive(Deserialize)]
struct VersionProbe {
    format_version: u32,
}

/// JSON text of a model. Floats are written in shortest round-trip form,
/// so loading reproduces every value exactly.
pub fn checkpoint_to_string(model: &Model) -> String {
    let file = CheckpointFile {
        format_version: CHECKPOINT_VERSION,
        config: model.config,
        seed: model.seed,
        scaler: model.scaler.clone(),
        tensors: model
            .params
            .named_tensors()
            .into_iter()
            .map(|(name, t)| NamedTensor {
                name: name.to_string(),
                shape: t.shape().to_vec(),
                data: t.data().to_vec(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("checkpoint serializes")
}

pub fn parse_checkpoint(text: &str) -> Result<Model> {
    let probe: VersionProbe =
        serde_json::from_str(text).map_err(|e| Error::Format(format!("unreadable checkpoint: {e}")))?;
    if !SUPPORTED_VERSIONS.contains(&probe.format_version) {
        return Err(Error::Format(format!(
            "checkpoint format version {} is not supported (supported: {:?})",
            probe.format_version, SUPPORTED_VERSIONS
        )));
    }
    let file: CheckpointFile =
        serde_json::from_str(text).map_err(|e| Error::Format(format!("malformed checkpoint: {e}")))?;
    file.config.validate().map_err(|e| Error::Format(e.to_string()))?;
    let mut params = ModelParams::zeros(&file.config);
    let slots = params.named_tensors_mut();
    if slots.len() != file.tensors.len() {
        return Err(Error::Format(format!(
            "checkpoint has {} tensors, {} model needs {}",
            file.tensors.len(),
            file.config.arch.as_str(),
            slots.len()
        )));
    }
    for ((name, slot), t) in slots.into_iter().zip(file.tensors) {
        if t.name != name || t.shape != slot.shape() {
            return Err(Error::Format(format!(
                "tensor {} {:?} does not match expected {name} {:?}",
                t.name,
                t.shape,
                slot.shape()
            )));
        }
        *slot = Tensor::new(t.shape, t.data).map_err(|e| Error::Format(e.to_string()))?;
    }
    if !params.is_finite() {
        return Err(Error::Format("checkpoint contains non-finite values".into()));
    }
    Model::new(file.config, params, file.scaler, file.seed).map_err(|e| Error::Format(e.to_string()))
}

pub fn save_checkpoint(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    crate::scenario::write_file(path.as_ref(), &checkpoint_to_string(model))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_checkpoint(&text)
}
