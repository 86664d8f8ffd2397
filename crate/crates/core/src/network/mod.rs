//! The perceived-risk classifier: dual LSTM encoders (ego motion and
//! environmental risk) fused by cross-attention, a two-layer softmax head,
//! and the LSTM-only and fully-connected comparison models.
//!
//! Gradients are computed by hand-written reverse-mode passes over `f64`
//! buffers.

mod attention;
mod checkpoint;
mod lstm;
mod model;
mod params;
mod tensor;
mod train;
mod window;

pub use attention::cross_attention;
pub use checkpoint::{
    checkpoint_to_string, load_checkpoint, parse_checkpoint, save_checkpoint, CHECKPOINT_VERSION,
    SUPPORTED_VERSIONS,
};
pub use lstm::lstm_forward;
pub use model::{check_params, forward, loss_and_grads, InputScaler, Model, Output, WindowSample};
pub use params::{
    Arch, AttentionParams, DenseParams, EgoChannels, LstmParams, ModelConfig, ModelParams, ENV_WIDTH,
};
pub use tensor::{softmax, Tensor};
pub use train::{
    batch_grads, fcnn_baseline, history_to_jsonl, inverse_frequency_weights, stratified_split, train,
    EpochRecord, Split, TrainConfig, TrainOutcome,
};
pub use window::{build_windows, ego_rows};
