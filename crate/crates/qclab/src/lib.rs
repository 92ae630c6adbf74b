//! Config-driven experiment runner over `qclab-core`.

pub mod config;
pub mod experiments;
pub mod plot;
pub mod report;

pub use config::{ConfigError, ExperimentConfig, ExperimentKind};
pub use experiments::{run, RunError};
pub use report::{Report, Row};
