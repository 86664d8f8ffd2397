use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{loss_and_grads, InputScaler, Model, WindowSample};
use super::params::{Arch, ModelConfig, ModelParams};
use crate::evaluation::macro_ovr_auc;
use crate::{Error, Result, NUM_LEVELS};

/// Samples per gradient chunk. Chunks are reduced in a fixed order, so the
/// result does not depend on how many threads evaluate them.
const GRAD_CHUNK: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    #[serde(flatten)]
    pub model: ModelConfig,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub batch: usize,
    pub epochs: usize,
    pub seed: u64,
    /// `None` selects inverse class frequency on the training split.
    pub class_weights: Option<[f64; NUM_LEVELS]>,
    /// Global gradient-norm clip; 0 disables clipping.
    pub clip_norm: f64,
    /// Evaluate gradient chunks on the rayon pool. Results are identical either way.
    pub parallel: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            model: ModelConfig::default(),
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            batch: 64,
            epochs: 50,
            seed: 0,
            class_weights: None,
            clip_norm: 5.0,
            parallel: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        let bad = |m: String| Err(Error::Config(m));
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return bad(format!("lr must be finite and >= 0, got {}", self.lr));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("beta1 and beta2 must lie in [0, 1)".into());
        }
        if !(self.eps > 0.0) {
            return bad("eps must be > 0".into());
        }
        if self.batch == 0 {
            return bad("batch must be >= 1".into());
        }
        if !(self.clip_norm >= 0.0) {
            return bad("clip_norm must be >= 0".into());
        }
        if let Some(w) = self.class_weights {
            if w.iter().any(|&x| !(x.is_finite() && x >= 0.0)) || w.iter().all(|&x| x == 0.0) {
                return bad(format!("class weights {w:?} must be finite, >= 0 and not all zero"));
            }
        }
        Ok(())
    }
}

/// Indices into the dataset for each split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Per-class 80/10/10 split. Each class is shuffled with the seed and its
/// first `round(0.1 n)` members go to validation, the next `round(0.1 n)` to test.
pub fn stratified_split(labels: &[usize], seed: u64) -> Split {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = Split {
        train: vec![],
        val: vec![],
        test: vec![],
    };
    for k in 0..NUM_LEVELS {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == k).collect();
        idx.shuffle(&mut rng);
        let m = (idx.len() as f64 * 0.1).round() as usize;
        split.val.extend_from_slice(&idx[..m]);
        split.test.extend_from_slice(&idx[m..2 * m]);
        split.train.extend_from_slice(&idx[2 * m..]);
    }
    split.train.sort_unstable();
    split.val.sort_unstable();
    split.test.sort_unstable();
    split
}

/// `n / (K · count_k)` over the K classes present; absent classes get 0.
pub fn inverse_frequency_weights(labels: impl IntoIterator<Item = usize>) -> [f64; NUM_LEVELS] {
    let mut counts = [0usize; NUM_LEVELS];
    for y in labels {
        counts[y] += 1;
    }
    let n: usize = counts.iter().sum();
    let present = counts.iter().filter(|&&c| c > 0).count();
    counts.map(|c| {
        if c == 0 {
            0.0
        } else {
            n as f64 / (present * c) as f64
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    /// Macro one-vs-rest AUC on the validation split; `None` when undefined.
    pub val_auc: Option<f64>,
}

pub fn history_to_jsonl(history: &[EpochRecord]) -> String {
    history
        .iter()
        .map(|r| serde_json::to_string(r).expect("epoch record serializes") + "\n")
        .collect()
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the best validation AUC.
    pub model: Model,
    pub history: Vec<EpochRecord>,
    pub split: Split,
    pub best_epoch: usize,
    pub class_weights: [f64; NUM_LEVELS],
}

/// Loss and gradient of a batch, evaluated in fixed-size chunks.
pub fn batch_grads(
    params: &ModelParams,
    cfg: &ModelConfig,
    batch: &[&WindowSample],
    weights: &[f64; NUM_LEVELS],
    parallel: bool,
) -> Result<(f64, ModelParams)> {
    let n = batch.len() as f64;
    let chunk = |c: &[&WindowSample]| {
        loss_and_grads(params, cfg, c, weights).map(|(l, g)| (l, g, c.len() as f64 / n))
    };
    let parts: Vec<_> = if parallel {
        batch.par_chunks(GRAD_CHUNK).map(chunk).collect::<Result<_>>()?
    } else {
        batch.chunks(GRAD_CHUNK).map(chunk).collect::<Result<_>>()?
    };
    let mut loss = 0.0;
    let mut total = params.zeros_like();
    for (l, g, frac) in parts {
        loss += l * frac;
        for ((_, acc), (_, t)) in total.named_tensors_mut().into_iter().zip(g.named_tensors()) {
            for (a, v) in acc.data_mut().iter_mut().zip(t.data()) {
                *a += v * frac;
            }
        }
    }
    Ok((loss, total))
}

struct Adam {
    m: ModelParams,
    v: ModelParams,
    t: i32,
}

impl Adam {
    fn new(p: &ModelParams) -> Self {
        Adam {
            m: p.zeros_like(),
            v: p.zeros_like(),
            t: 0,
        }
    }

    fn step(&mut self, params: &mut ModelParams, grads: &ModelParams, cfg: &TrainConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        let ps = params.named_tensors_mut();
        let gs = grads.named_tensors();
        let ms = self.m.named_tensors_mut();
        let vs = self.v.named_tensors_mut();
        for (((p, g), m), v) in ps.into_iter().zip(gs).zip(ms).zip(vs) {
            let (p, g, m, v) = (p.1.data_mut(), g.1.data(), m.1.data_mut(), v.1.data_mut());
            for i in 0..p.len() {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                p[i] -= cfg.lr * (m[i] / c1) / ((v[i] / c2).sqrt() + cfg.eps);
            }
        }
    }
}

fn clip(grads: &mut ModelParams, max_norm: f64) {
    if max_norm <= 0.0 {
        return;
    }
    let norm = grads
        .named_tensors()
        .iter()
        .map(|(_, t)| t.sum_squares())
        .sum::<f64>()
        .sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        for (_, t) in grads.named_tensors_mut() {
            t.data_mut().iter_mut().for_each(|v| *v *= s);
        }
    }
}

fn validation_auc(model: &Model, samples: &[&WindowSample], parallel: bool) -> Result<Option<f64>> {
    if samples.len() < 2 {
        return Ok(None);
    }
    let probs: Vec<[f64; NUM_LEVELS]> = if parallel {
        samples
            .par_iter()
            .map(|s| super::model::forward(&model.params, &model.config, s).map(|o| o.probs))
            .collect::<Result<_>>()?
    } else {
        samples
            .iter()
            .map(|s| super::model::forward(&model.params, &model.config, s).map(|o| o.probs))
            .collect::<Result<_>>()?
    };
    let labels: Vec<usize> = samples.iter().map(|s| s.label.index()).collect();
    Ok(macro_ovr_auc(&probs, &labels).ok().map(|r| r.macro_auc))
}

/// Trains from a seeded initialization with Adam, keeping the parameters of
/// the best validation epoch.
pub fn train(dataset: &[WindowSample], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::Data("training dataset is empty".into()));
    }
    for s in dataset {
        s.check(&cfg.model)?;
    }
    let labels: Vec<usize> = dataset.iter().map(|s| s.label.index()).collect();
    let split = stratified_split(&labels, cfg.seed);
    if split.train.is_empty() {
        return Err(Error::Data("training split is empty".into()));
    }
    let scaler = InputScaler::fit(split.train.iter().map(|&i| &dataset[i]), cfg.model.ego_width());
    let scaled: Vec<WindowSample> = dataset.iter().map(|s| scaler.apply(s)).collect();
    let weights = cfg
        .class_weights
        .unwrap_or_else(|| inverse_frequency_weights(split.train.iter().map(|&i| labels[i])));
    let val: Vec<&WindowSample> = split.val.iter().map(|&i| &scaled[i]).collect();

    let mut model = Model::new(cfg.model, ModelParams::init(&cfg.model, cfg.seed), scaler, cfg.seed)?;
    let mut adam = Adam::new(&model.params);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_5eed);
    let mut order = split.train.clone();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, ModelParams)> = None;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for idx in order.chunks(cfg.batch) {
            let batch: Vec<&WindowSample> = idx.iter().map(|&i| &scaled[i]).collect();
            let (loss, mut grads) = batch_grads(&model.params, &cfg.model, &batch, &weights, cfg.parallel)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, loss });
            }
            loss_sum += loss * batch.len() as f64;
            clip(&mut grads, cfg.clip_norm);
            adam.step(&mut model.params, &grads, cfg);
        }
        let train_loss = loss_sum / order.len() as f64;
        if !model.params.is_finite() {
            return Err(Error::Divergence {
                epoch,
                loss: f64::NAN,
            });
        }
        let val_auc = validation_auc(&model, &val, cfg.parallel)?;
        log::debug!("epoch {epoch}: train loss {train_loss:.5}, val auc {val_auc:?}");
        if let Some(a) = val_auc {
            if best.as_ref().map_or(true, |(b, _, _)| a > *b) {
                best = Some((a, epoch, model.params.clone()));
            }
        }
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_auc,
        });
    }
    let best_epoch = match best {
        Some((_, epoch, params)) => {
            model.params = params;
            epoch
        }
        None => cfg.epochs,
    };
    Ok(TrainOutcome {
        model,
        history,
        split,
        best_epoch,
        class_weights: weights,
    })
}

/// Same training procedure with the fully-connected topology.
pub fn fcnn_baseline(dataset: &[WindowSample], cfg: &TrainConfig) -> Result<TrainOutcome> {
    let mut cfg = cfg.clone();
    cfg.model.arch = Arch::Fcnn;
    train(dataset, &cfg)
}
