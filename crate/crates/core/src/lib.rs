//! Perceived driving-risk prediction.
//!
//! The crate covers the whole path from driving logs to an evaluated
//! classifier:
//!
//! * [`scenario`]: 10 Hz driving logs, rating traces, synthetic scenario
//!   generation and an oracle labeler.
//! * [`riskfield`]: per-participant PODAR risk, directional maxima and
//!   viewpoint-weighted participant counts.
//! * [`clustering`]: driver trait encoding, k-means, cluster-count selection
//!   and PCA projection.
//! * [`network`]: dual LSTM encoders fused by cross-attention, trained with
//!   hand-written reverse-mode gradients, plus LSTM and fully-connected
//!   baselines.
//! * [`evaluation`]: confusion matrices, per-class metrics, one-vs-rest AUC,
//!   one-way ANOVA and comparison reports.
//! * [`pipeline`]: configuration, CLI commands and the rating HTTP service.

pub mod clustering;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod network;
pub mod pipeline;
pub mod riskfield;
pub mod scenario;

pub use error::{Error, Result};

/// Number of perceived-risk levels (0 = no risk .. 4 = highest risk).
pub const NUM_LEVELS: usize = 5;

/// Sampling period of every scenario log, in seconds.
pub const FRAME_DT: f64 = 0.1;
