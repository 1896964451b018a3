//! Experiment runners and configuration for the `deconv` command.

pub mod analysis;
pub mod config;
pub mod error;
pub mod experiments;

pub use config::{ExperimentId, ExperimentSpec};
pub use error::AppError;
pub use experiments::{run_and_write, run_fig1, run_fig2, run_fig3, taylor_sin_mix, Fig1Outcome, SignalOutcome};
