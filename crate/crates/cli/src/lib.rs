//! Batch driver for weak-rate studies: experiment configs, study
//! orchestration and report files.

pub mod config;
pub mod error;
pub mod report;
pub mod studies;

pub use config::ExperimentConfig;
pub use error::{exit, CliError};
pub use report::{Report, Study};
pub use studies::run;
