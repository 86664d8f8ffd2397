use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use crate::{Error, Result, NUM_LEVELS};

/// Width of the environment input (the six risk features).
pub const ENV_WIDTH: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    /// Dual LSTM encoders fused by cross-attention.
    Lstmca,
    /// Dual LSTM encoders, final states concatenated (no attention).
    Lstm,
    /// Flattened window through two hidden layers.
    Fcnn,
}

impl Arch {
    pub const ALL: [Arch; 3] = [Arch::Lstmca, Arch::Lstm, Arch::Fcnn];

    pub fn as_str(self) -> &'static str {
        match self {
            Arch::Lstmca => "lstmca",
            Arch::Lstm => "lstm",
            Arch::Fcnn => "fcnn",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Arch::Lstmca => "LSTMCA",
            Arch::Lstm => "LSTM",
            Arch::Fcnn => "FCNN",
        }
    }
}

impl std::str::FromStr for Arch {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lstmca" => Ok(Arch::Lstmca),
            "lstm" => Ok(Arch::Lstm),
            "fcnn" => Ok(Arch::Fcnn),
            _ => Err(Error::Config(format!("unknown model {s:?}; valid: lstmca, lstm, fcnn"))),
        }
    }
}

/// Ego input channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EgoChannels {
    /// `(vx, vy, ax, ay, yaw_rate, speed)`
    Reduced,
    /// `(x, y, vx, vy, ax, ay, yaw, pitch, roll)`
    Raw,
}

impl EgoChannels {
    pub fn width(self) -> usize {
        match self {
            EgoChannels::Reduced => 6,
            EgoChannels::Raw => 9,
        }
    }
}

/// Network topology.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub arch: Arch,
    /// Window length in frames.
    pub window: usize,
    pub hidden: usize,
    pub attn: usize,
    pub ego_channels: EgoChannels,
    /// Environment branch supplies the queries instead of the ego branch.
    pub swap_query: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            arch: Arch::Lstmca,
            window: 20,
            hidden: 32,
            attn: 32,
            ego_channels: EgoChannels::Reduced,
            swap_query: false,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 1 || self.hidden < 1 || self.attn < 1 {
            return Err(Error::Config(format!(
                "window ({}), hidden ({}) and attn ({}) must all be >= 1",
                self.window, self.hidden, self.attn
            )));
        }
        Ok(())
    }

    pub fn ego_width(&self) -> usize {
        self.ego_channels.width()
    }

    fn head_input(&self) -> usize {
        match self.arch {
            Arch::Lstmca => 2 * self.hidden + self.attn,
            Arch::Lstm => 2 * self.hidden,
            Arch::Fcnn => self.window * (self.ego_width() + ENV_WIDTH),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    /// `input × 4H`, gate blocks ordered input, forget, cell, output.
    pub w_ih: Tensor,
    /// `H × 4H`
    pub w_hh: Tensor,
    /// `4H`
    pub b: Tensor,
}

impl LstmParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        LstmParams {
            w_ih: Tensor::zeros(&[input, 4 * hidden]),
            w_hh: Tensor::zeros(&[hidden, 4 * hidden]),
            b: Tensor::zeros(&[4 * hidden]),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_hh.rows()
    }

    pub fn input(&self) -> usize {
        self.w_ih.rows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    /// `H × d_a`
    pub w_q: Tensor,
    pub w_k: Tensor,
    pub w_v: Tensor,
    /// `d_a × d_a` output projection of the pooled context.
    pub w_o: Tensor,
    pub b_o: Tensor,
}

impl AttentionParams {
    pub fn zeros(hidden: usize, attn: usize) -> Self {
        AttentionParams {
            w_q: Tensor::zeros(&[hidden, attn]),
            w_k: Tensor::zeros(&[hidden, attn]),
            w_v: Tensor::zeros(&[hidden, attn]),
            w_o: Tensor::zeros(&[attn, attn]),
            b_o: Tensor::zeros(&[attn]),
        }
    }

    pub fn dim(&self) -> usize {
        self.w_q.cols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    pub w: Tensor,
    pub b: Tensor,
}

impl DenseParams {
    pub fn zeros(input: usize, output: usize) -> Self {
        DenseParams {
            w: Tensor::zeros(&[input, output]),
            b: Tensor::zeros(&[output]),
        }
    }
}

/// All trainable tensors of one model. Gradients use the same type.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    Recurrent {
        ego: LstmParams,
        env: LstmParams,
        attn: Option<AttentionParams>,
        hidden: DenseParams,
        out: DenseParams,
    },
    Fcnn {
        l1: DenseParams,
        l2: DenseParams,
        out: DenseParams,
    },
}

impl ModelParams {
    pub fn zeros(cfg: &ModelConfig) -> Self {
        let h = cfg.hidden;
        match cfg.arch {
            Arch::Lstmca | Arch::Lstm => ModelParams::Recurrent {
                ego: LstmParams::zeros(cfg.ego_width(), h),
                env: LstmParams::zeros(ENV_WIDTH, h),
                attn: (cfg.arch == Arch::Lstmca).then(|| AttentionParams::zeros(h, cfg.attn)),
                hidden: DenseParams::zeros(cfg.head_input(), h),
                out: DenseParams::zeros(h, NUM_LEVELS),
            },
            Arch::Fcnn => ModelParams::Fcnn {
                l1: DenseParams::zeros(cfg.head_input(), h),
                l2: DenseParams::zeros(h, h),
                out: DenseParams::zeros(h, NUM_LEVELS),
            },
        }
    }

    /// Uniform `±1/√fan_in` initialization; LSTM forget-gate biases start at 1.
    pub fn init(cfg: &ModelConfig, seed: u64) -> Self {
        let mut params = ModelParams::zeros(cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hidden = cfg.hidden;
        for (name, t) in params.named_tensors_mut() {
            if name.ends_with(".b") || name.ends_with(".b_o") {
                if name.ends_with("lstm.b") {
                    t.data_mut()[hidden..2 * hidden].fill(1.0);
                }
                continue;
            }
            let fan_in = t.rows().max(1) as f64;
            let bound = 1.0 / fan_in.sqrt();
            for v in t.data_mut() {
                *v = rng.gen_range(-bound..bound);
            }
        }
        params
    }

    pub fn named_tensors(&self) -> Vec<(&'static str, &Tensor)> {
        match self {
            ModelParams::Recurrent {
                ego,
                env,
                attn,
                hidden,
                out,
            } => {
                let mut v = vec![
                    ("ego_lstm.w_ih", &ego.w_ih),
                    ("ego_lstm.w_hh", &ego.w_hh),
                    ("ego_lstm.b", &ego.b),
                    ("env_lstm.w_ih", &env.w_ih),
                    ("env_lstm.w_hh", &env.w_hh),
                    ("env_lstm.b", &env.b),
                ];
                if let Some(a) = attn {
                    v.extend([
                        ("attn.w_q", &a.w_q),
                        ("attn.w_k", &a.w_k),
                        ("attn.w_v", &a.w_v),
                        ("attn.w_o", &a.w_o),
                        ("attn.b_o", &a.b_o),
                    ]);
                }
                v.extend([
                    ("head.hidden.w", &hidden.w),
                    ("head.hidden.b", &hidden.b),
                    ("head.out.w", &out.w),
                    ("head.out.b", &out.b),
                ]);
                v
            }
            ModelParams::Fcnn { l1, l2, out } => vec![
                ("fc1.w", &l1.w),
                ("fc1.b", &l1.b),
                ("fc2.w", &l2.w),
                ("fc2.b", &l2.b),
                ("head.out.w", &out.w),
                ("head.out.b", &out.b),
            ],
        }
    }

    pub fn named_tensors_mut(&mut self) -> Vec<(&'static str, &mut Tensor)> {
        match self {
            ModelParams::Recurrent {
                ego,
                env,
                attn,
                hidden,
                out,
            } => {
                let mut v = vec![
                    ("ego_lstm.w_ih", &mut ego.w_ih),
                    ("ego_lstm.w_hh", &mut ego.w_hh),
                    ("ego_lstm.b", &mut ego.b),
                    ("env_lstm.w_ih", &mut env.w_ih),
                    ("env_lstm.w_hh", &mut env.w_hh),
                    ("env_lstm.b", &mut env.b),
                ];
                if let Some(a) = attn {
                    v.extend([
                        ("attn.w_q", &mut a.w_q),
                        ("attn.w_k", &mut a.w_k),
                        ("attn.w_v", &mut a.w_v),
                        ("attn.w_o", &mut a.w_o),
                        ("attn.b_o", &mut a.b_o),
                    ]);
                }
                v.extend([
                    ("head.hidden.w", &mut hidden.w),
                    ("head.hidden.b", &mut hidden.b),
                    ("head.out.w", &mut out.w),
                    ("head.out.b", &mut out.b),
                ]);
                v
            }
            ModelParams::Fcnn { l1, l2, out } => vec![
                ("fc1.w", &mut l1.w),
                ("fc1.b", &mut l1.b),
                ("fc2.w", &mut l2.w),
                ("fc2.b", &mut l2.b),
                ("head.out.w", &mut out.w),
                ("head.out.b", &mut out.b),
            ],
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for (_, t) in z.named_tensors_mut() {
            t.fill(0.0);
        }
        z
    }

    pub fn parameter_count(&self) -> usize {
        self.named_tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.named_tensors().iter().all(|(_, t)| t.is_finite())
    }

    /// Output-layer bias (the logits offset).
    pub fn out_bias_mut(&mut self) -> &mut Tensor {
        match self {
            ModelParams::Recurrent { out, .. } | ModelParams::Fcnn { out, .. } => &mut out.b,
        }
    }
}
