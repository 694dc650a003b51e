//! Reproducible experiment harness: seeded RNG, config files, the runner
//! behind the `devs` binary, and summary statistics.

pub mod config;
pub mod rng;
pub mod run;
pub mod summary;

pub use config::{ConfigError, ExperimentConfig, ModelConfig};
pub use rng::RngState;
pub use run::{
    flatten_check, run_experiment, run_experiment_traced, FlattenCheck, RunError, RunReport,
};
pub use summary::{summarize, SummaryError, WaitSummary};
