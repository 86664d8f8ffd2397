//! Configuration, file-backed pipeline stages, the synthetic rater study and
//! the rating HTTP service.

pub mod commands;
pub mod config;
pub mod service;
pub mod study;

pub use commands::{
    cmd_cluster, cmd_eval, cmd_features, cmd_generate, cmd_report, cmd_run, cmd_train, Layout, Manifest,
};
pub use config::RunConfig;
