//! Pipeline commands behind the `adeffect` binary.

pub mod commands;
pub mod config;
pub mod report;
pub mod synth;

pub use commands::{cmd_analyze, cmd_clean, cmd_features, cmd_train_eval, Outcome};
pub use config::Config;
