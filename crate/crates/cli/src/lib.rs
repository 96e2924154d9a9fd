//! Experiment harness for the `homogenizer` crate: strict JSON configs,
//! seeded runs on a worker pool and CSV/JSON artifacts.
//!
//! Random couplings for trajectory `i` of a batch come from ChaCha8 seeded
//! with the config seed on stream `i`, so output bytes never depend on the
//! number of workers.

pub mod config;
pub mod error;
pub mod run;

use std::path::{Path, PathBuf};

pub use config::{parse_config, EtaConfig, Experiment, ExperimentConfig, InitConfig};
pub use error::{ConfigError, Context, RunError};
pub use run::{run, Artifacts};

/// Reads and parses a config file, then applies command-line overrides.
pub fn load_config(
    path: &Path,
    experiment: Experiment,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    let mut config = parse_config(&text)?;
    if config.experiment != experiment {
        return Err(ConfigError::WrongExperiment { expected: experiment.name(), found: config.experiment.name() });
    }
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(out) = out {
        config.out_dir = out;
    }
    Ok(config)
}
