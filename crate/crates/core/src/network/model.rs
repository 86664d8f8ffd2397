use serde::{Deserialize, Serialize};

use super::attention;
use super::lstm::{self, check_input};
use super::params::{DenseParams, ModelConfig, ModelParams, ENV_WIDTH};
use super::tensor::{log_sum_exp, mat_vec_acc, outer_acc, softmax, vec_mat_acc};
use crate::scenario::Level;
use crate::{Error, Result, NUM_LEVELS};

/// One training/inference example: aligned ego and environment sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSample {
    pub ego: Vec<Vec<f64>>,
    pub env: Vec<Vec<f64>>,
    pub label: Level,
}

impl WindowSample {
    pub fn len(&self) -> usize {
        self.ego.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ego.is_empty()
    }

    pub fn check(&self, cfg: &ModelConfig) -> Result<()> {
        if self.ego.len() != cfg.window || self.env.len() != cfg.window {
            return Err(Error::Shape(format!(
                "window has {} ego and {} env steps, model expects {}",
                self.ego.len(),
                self.env.len(),
                cfg.window
            )));
        }
        check_input(&self.ego, cfg.ego_width(), "ego")?;
        check_input(&self.env, ENV_WIDTH, "env")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub logits: [f64; NUM_LEVELS],
    pub probs: [f64; NUM_LEVELS],
}

impl Output {
    fn from_logits(logits: Vec<f64>) -> Self {
        let p = softmax(&logits);
        let mut out = Output {
            logits: [0.0; NUM_LEVELS],
            probs: [0.0; NUM_LEVELS],
        };
        out.logits.copy_from_slice(&logits);
        out.probs.copy_from_slice(&p);
        out
    }

    /// Most probable level; ties go to the lower level.
    pub fn level(&self) -> Level {
        Level::saturating(argmax_lower(&self.probs) as i64)
    }
}

pub(crate) fn argmax_lower(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

struct DenseTrace {
    input: Vec<f64>,
    /// Post-activation output.
    output: Vec<f64>,
}

fn dense(x: &[f64], p: &DenseParams, tanh: bool) -> DenseTrace {
    let mut y = p.b.data().to_vec();
    vec_mat_acc(x, &p.w, &mut y);
    if tanh {
        y.iter_mut().for_each(|v| *v = v.tanh());
    }
    DenseTrace {
        input: x.to_vec(),
        output: y,
    }
}

/// `dy` is w.r.t. the layer output; returns the gradient w.r.t. its input.
fn dense_backward(tr: &DenseTrace, p: &DenseParams, dy: &[f64], tanh: bool, g: &mut DenseParams) -> Vec<f64> {
    let dz: Vec<f64> = if tanh {
        dy.iter().zip(&tr.output).map(|(d, y)| d * (1.0 - y * y)).collect()
    } else {
        dy.to_vec()
    };
    outer_acc(&tr.input, &dz, &mut g.w);
    for (b, d) in g.b.data_mut().iter_mut().zip(&dz) {
        *b += d;
    }
    let mut dx = vec![0.0; tr.input.len()];
    mat_vec_acc(&p.w, &dz, &mut dx);
    dx
}

enum Trace {
    Recurrent {
        ego: lstm::LstmTrace,
        env: lstm::LstmTrace,
        attn: Option<attention::AttentionTrace>,
        hidden: DenseTrace,
        out: DenseTrace,
    },
    Fcnn {
        l1: DenseTrace,
        l2: DenseTrace,
        out: DenseTrace,
    },
}

impl Trace {
    fn logits(&self) -> &[f64] {
        match self {
            Trace::Recurrent { out, .. } | Trace::Fcnn { out, .. } => &out.output,
        }
    }
}

fn forward_trace(params: &ModelParams, cfg: &ModelConfig, s: &WindowSample) -> Trace {
    match params {
        ModelParams::Recurrent {
            ego,
            env,
            attn,
            hidden,
            out,
        } => {
            let te = lstm::forward_trace(&s.ego, ego);
            let tv = lstm::forward_trace(&s.env, env);
            let mut feat = Vec::with_capacity(hidden.w.rows());
            feat.extend_from_slice(te.last());
            feat.extend_from_slice(tv.last());
            let ta = attn.as_ref().map(|a| {
                let (q, kv) = if cfg.swap_query {
                    (&tv.hidden, &te.hidden)
                } else {
                    (&te.hidden, &tv.hidden)
                };
                attention::forward_trace(q, kv, a)
            });
            if let Some(t) = &ta {
                feat.extend_from_slice(&t.output);
            }
            let th = dense(&feat, hidden, true);
            let to = dense(&th.output, out, false);
            Trace::Recurrent {
                ego: te,
                env: tv,
                attn: ta,
                hidden: th,
                out: to,
            }
        }
        ModelParams::Fcnn { l1, l2, out } => {
            let mut x = Vec::with_capacity(l1.w.rows());
            for (e, v) in s.ego.iter().zip(&s.env) {
                x.extend_from_slice(e);
                x.extend_from_slice(v);
            }
            let t1 = dense(&x, l1, true);
            let t2 = dense(&t1.output, l2, true);
            let to = dense(&t2.output, out, false);
            Trace::Fcnn { l1: t1, l2: t2, out: to }
        }
    }
}

fn backward(trace: &Trace, params: &ModelParams, cfg: &ModelConfig, dlogits: &[f64], grads: &mut ModelParams) {
    match (trace, params, grads) {
        (
            Trace::Recurrent {
                ego: te,
                env: tv,
                attn: ta,
                hidden: th,
                out: to,
            },
            ModelParams::Recurrent {
                ego,
                env,
                attn,
                hidden,
                out,
            },
            ModelParams::Recurrent {
                ego: g_ego,
                env: g_env,
                attn: g_attn,
                hidden: g_hidden,
                out: g_out,
            },
        ) => {
            let h = cfg.hidden;
            let steps = te.hidden.len();
            let dh = dense_backward(to, out, dlogits, false, g_out);
            let dfeat = dense_backward(th, hidden, &dh, true, g_hidden);
            let mut d_ego = vec![vec![0.0; h]; steps];
            let mut d_env = vec![vec![0.0; h]; steps];
            d_ego[steps - 1].copy_from_slice(&dfeat[..h]);
            d_env[steps - 1].copy_from_slice(&dfeat[h..2 * h]);
            if let (Some(tr), Some(a), Some(ga)) = (ta, attn, g_attn) {
                let (dq, dkv) = attention::backward(tr, a, &dfeat[2 * h..], ga);
                let (dq_dst, dkv_dst) = if cfg.swap_query {
                    (&mut d_env, &mut d_ego)
                } else {
                    (&mut d_ego, &mut d_env)
                };
                for t in 0..steps {
                    for j in 0..h {
                        dq_dst[t][j] += dq[t][j];
                        dkv_dst[t][j] += dkv[t][j];
                    }
                }
            }
            lstm::backward(te, ego, &d_ego, g_ego);
            lstm::backward(tv, env, &d_env, g_env);
        }
        (
            Trace::Fcnn { l1: t1, l2: t2, out: to },
            ModelParams::Fcnn { l1, l2, out },
            ModelParams::Fcnn {
                l1: g1,
                l2: g2,
                out: g_out,
            },
        ) => {
            let d2 = dense_backward(to, out, dlogits, false, g_out);
            let d1 = dense_backward(t2, l2, &d2, true, g2);
            dense_backward(t1, l1, &d1, true, g1);
        }
        _ => unreachable!("trace, params and gradients share one architecture"),
    }
}

/// Checks that `params` match `cfg`, so the unchecked kernels never index out of range.
pub fn check_params(params: &ModelParams, cfg: &ModelConfig) -> Result<()> {
    let expected = ModelParams::zeros(cfg);
    let a = params.named_tensors();
    let b = expected.named_tensors();
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "parameter set has {} tensors, {} model expects {}",
            a.len(),
            cfg.arch.as_str(),
            b.len()
        )));
    }
    for ((na, ta), (nb, tb)) in a.iter().zip(&b) {
        if na != nb || ta.shape() != tb.shape() {
            return Err(Error::Shape(format!(
                "tensor {na} has shape {:?}, expected {nb} {:?}",
                ta.shape(),
                tb.shape()
            )));
        }
    }
    Ok(())
}

/// Forward pass on already-scaled inputs.
pub fn forward(params: &ModelParams, cfg: &ModelConfig, sample: &WindowSample) -> Result<Output> {
    sample.check(cfg)?;
    Ok(Output::from_logits(forward_trace(params, cfg, sample).logits().to_vec()))
}

/// Mean class-weighted cross-entropy over the batch and its exact gradient.
pub fn loss_and_grads(
    params: &ModelParams,
    cfg: &ModelConfig,
    batch: &[&WindowSample],
    class_weights: &[f64; NUM_LEVELS],
) -> Result<(f64, ModelParams)> {
    if batch.is_empty() {
        return Err(Error::Shape("empty batch".into()));
    }
    for s in batch {
        s.check(cfg)?;
    }
    let n = batch.len() as f64;
    let mut grads = params.zeros_like();
    let mut loss = 0.0;
    for s in batch {
        let trace = forward_trace(params, cfg, s);
        let logits = trace.logits();
        let y = s.label.index();
        let w = class_weights[y];
        loss += w * (log_sum_exp(logits) - logits[y]) / n;
        if w == 0.0 {
            continue;
        }
        let mut d = softmax(logits);
        d[y] -= 1.0;
        d.iter_mut().for_each(|v| *v *= w / n);
        backward(&trace, params, cfg, &d, &mut grads);
    }
    Ok((loss, grads))
}

/// Per-channel affine normalization fitted on training windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputScaler {
    pub ego_mean: Vec<f64>,
    pub ego_scale: Vec<f64>,
    /// Environment features are mapped through `ln(1 + x)` before standardizing.
    pub env_mean: Vec<f64>,
    pub env_scale: Vec<f64>,
}

fn mean_std(rows: impl Iterator<Item = Vec<f64>>, width: usize) -> (Vec<f64>, Vec<f64>) {
    let mut n = 0.0;
    let mut sum = vec![0.0; width];
    let mut sq = vec![0.0; width];
    for r in rows {
        n += 1.0;
        for j in 0..width {
            sum[j] += r[j];
            sq[j] += r[j] * r[j];
        }
    }
    if n == 0.0 {
        return (vec![0.0; width], vec![1.0; width]);
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let std = sq
        .iter()
        .zip(&mean)
        .map(|(s, m)| {
            let v = (s / n - m * m).max(0.0).sqrt();
            if v > 1e-9 {
                v
            } else {
                1.0
            }
        })
        .collect();
    (mean, std)
}

fn log_risk(x: f64) -> f64 {
    x.max(0.0).ln_1p()
}

impl InputScaler {
    pub fn identity(ego_width: usize) -> Self {
        InputScaler {
            ego_mean: vec![0.0; ego_width],
            ego_scale: vec![1.0; ego_width],
            env_mean: vec![0.0; ENV_WIDTH],
            env_scale: vec![1.0; ENV_WIDTH],
        }
    }

    pub fn is_identity(&self) -> bool {
        self.ego_mean.iter().chain(&self.env_mean).all(|&m| m == 0.0)
            && self.ego_scale.iter().chain(&self.env_scale).all(|&s| s == 1.0)
    }

    pub fn fit<'a>(samples: impl IntoIterator<Item = &'a WindowSample> + Clone, ego_width: usize) -> Self {
        let (ego_mean, ego_scale) = mean_std(
            samples.clone().into_iter().flat_map(|s| s.ego.iter().cloned()),
            ego_width,
        );
        let (env_mean, env_scale) = mean_std(
            samples
                .into_iter()
                .flat_map(|s| s.env.iter().map(|r| r.iter().map(|&x| log_risk(x)).collect())),
            ENV_WIDTH,
        );
        InputScaler {
            ego_mean,
            ego_scale,
            env_mean,
            env_scale,
        }
    }

    pub fn apply(&self, s: &WindowSample) -> WindowSample {
        if self.is_identity() {
            return s.clone();
        }
        let ego = s
            .ego
            .iter()
            .map(|r| {
                r.iter()
                    .zip(self.ego_mean.iter().zip(&self.ego_scale))
                    .map(|(x, (m, sd))| (x - m) / sd)
                    .collect()
            })
            .collect();
        let env = s
            .env
            .iter()
            .map(|r| {
                r.iter()
                    .zip(self.env_mean.iter().zip(&self.env_scale))
                    .map(|(&x, (m, sd))| (log_risk(x) - m) / sd)
                    .collect()
            })
            .collect();
        WindowSample {
            ego,
            env,
            label: s.label,
        }
    }
}

/// A trained network: topology, weights and the input normalization it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub params: ModelParams,
    pub scaler: InputScaler,
    pub seed: u64,
}

impl Model {
    pub fn new(config: ModelConfig, params: ModelParams, scaler: InputScaler, seed: u64) -> Result<Self> {
        config.validate()?;
        check_params(&params, &config)?;
        if scaler.ego_mean.len() != config.ego_width() || scaler.env_mean.len() != ENV_WIDTH {
            return Err(Error::Shape("scaler width does not match model inputs".into()));
        }
        Ok(Model {
            config,
            params,
            scaler,
            seed,
        })
    }

    /// Model with every parameter zero (uniform output).
    pub fn zeros(config: ModelConfig) -> Result<Self> {
        let params = ModelParams::zeros(&config);
        Model::new(config, params, InputScaler::identity(config.ego_width()), 0)
    }

    pub fn forward(&self, sample: &WindowSample) -> Result<Output> {
        sample.check(&self.config)?;
        forward(&self.params, &self.config, &self.scaler.apply(sample))
    }

    /// Predicted level and probabilities for each window, in order.
    pub fn predict(&self, windows: &[WindowSample]) -> Result<Vec<(Level, [f64; NUM_LEVELS])>> {
        windows
            .iter()
            .map(|w| self.forward(w).map(|o| (o.level(), o.probs)))
            .collect()
    }
}
