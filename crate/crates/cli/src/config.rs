//! Strict JSON experiment configs.
//!
//! Parsing fills every default, so serializing a parsed config gives its
//! canonical form and parsing that again is a fixed point.

use std::f64::consts::FRAC_PI_2;
use std::path::PathBuf;

use homogenizer::dynamics::{EtaSchedule, DEFAULT_GAUSSIAN_STDDEV};
use homogenizer::witness::{default_fiducial, default_grid, DEFAULT_GRID_POINTS};
use homogenizer::{DensityMatrix, ReservoirInit, ReservoirKind};
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Converge,
    GapCurve,
    Crossing,
    Regimes,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Converge => "converge",
            Experiment::GapCurve => "gap-curve",
            Experiment::Crossing => "crossing",
            Experiment::Regimes => "regimes",
        }
    }

    fn default_reservoir_size(self) -> usize {
        match self {
            Experiment::Converge | Experiment::Regimes => 4,
            Experiment::GapCurve | Experiment::Crossing => 3,
        }
    }
}

/// Reservoir preparation as written in a config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitConfig {
    Product {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_qubits: Option<usize>,
        /// Bloch vector of the ancilla state.
        #[serde(default = "ground_bloch")]
        xi: [f64; 3],
    },
    Bell {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_qubits: Option<usize>,
    },
    Ghz {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_qubits: Option<usize>,
    },
    AsymGhz {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_qubits: Option<usize>,
    },
    PerturbedGhz {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_qubits: Option<usize>,
        alpha: f64,
    },
    XErrorGhz {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_qubits: Option<usize>,
        #[serde(default = "first_site")]
        site: usize,
    },
}

fn ground_bloch() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

fn excited_bloch() -> [f64; 3] {
    [0.0, 0.0, -1.0]
}

fn first_site() -> usize {
    1
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig::Product { n_qubits: None, xi: ground_bloch() }
    }
}

impl InitConfig {
    fn n_qubits_mut(&mut self) -> &mut Option<usize> {
        match self {
            InitConfig::Product { n_qubits, .. }
            | InitConfig::Bell { n_qubits }
            | InitConfig::Ghz { n_qubits }
            | InitConfig::AsymGhz { n_qubits }
            | InitConfig::PerturbedGhz { n_qubits, .. }
            | InitConfig::XErrorGhz { n_qubits, .. } => n_qubits,
        }
    }

    pub fn n_qubits(&self) -> usize {
        match self {
            InitConfig::Product { n_qubits, .. }
            | InitConfig::Bell { n_qubits }
            | InitConfig::Ghz { n_qubits }
            | InitConfig::AsymGhz { n_qubits }
            | InitConfig::PerturbedGhz { n_qubits, .. }
            | InitConfig::XErrorGhz { n_qubits, .. } => n_qubits.unwrap_or(0),
        }
    }

    fn min_qubits(&self) -> usize {
        match self {
            InitConfig::Product { .. } => 1,
            InitConfig::Bell { .. } => 2,
            _ => 3,
        }
    }

    pub fn is_product(&self) -> bool {
        matches!(self, InitConfig::Product { .. })
    }

    /// Library-side reservoir description. Only valid after [`parse_config`].
    pub fn reservoir(&self) -> ReservoirInit {
        let kind = match *self {
            InitConfig::Product { xi, .. } => ReservoirKind::Product(DensityMatrix::from_bloch(xi).expect("validated Bloch vector")),
            InitConfig::Bell { .. } => ReservoirKind::Bell,
            InitConfig::Ghz { .. } => ReservoirKind::Ghz,
            InitConfig::AsymGhz { .. } => ReservoirKind::AsymGhz,
            InitConfig::PerturbedGhz { alpha, .. } => ReservoirKind::PerturbedGhz { alpha },
            InitConfig::XErrorGhz { site, .. } => ReservoirKind::XErrorGhz { site },
        };
        ReservoirInit::new(kind, self.n_qubits())
    }
}

/// Per-step coupling strengths. Random kinds draw from the top-level seed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EtaConfig {
    Fixed {
        value: f64,
    },
    #[default]
    Uniform,
    Gaussian {
        mean: f64,
        #[serde(default = "default_stddev")]
        stddev: f64,
    },
}

fn default_stddev() -> f64 {
    DEFAULT_GAUSSIAN_STDDEV
}

impl EtaConfig {
    /// Schedule for trajectory `stream` of a batch.
    pub fn schedule(&self, seed: u64, length: usize, stream: u64) -> EtaSchedule {
        let schedule = match *self {
            EtaConfig::Fixed { value } => EtaSchedule::fixed(value, length),
            EtaConfig::Uniform => EtaSchedule::uniform(seed, length),
            EtaConfig::Gaussian { mean, stddev } => EtaSchedule::gaussian(mean, stddev, seed, length),
        };
        schedule.with_stream(stream)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub init: InitConfig,
    #[serde(default = "default_steps")]
    pub n_steps: usize,
    #[serde(default)]
    pub eta: EtaConfig,
    /// Coupling grid for witness runs, swap probabilities for `regimes`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Bloch vector of the initial system state.
    #[serde(default = "excited_bloch")]
    pub system: [f64; 3],
    /// Bloch vector of the witness fiducial input; absent means `I/2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiducial: Option<[f64; 3]>,
    #[serde(default = "default_trajectories")]
    pub n_trajectories: usize,
}

fn default_steps() -> usize {
    50
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_trajectories() -> usize {
    1
}

pub const DEFAULT_REGIME_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

impl ExperimentConfig {
    /// Grid after defaults: 60 couplings for witness runs, five swap
    /// probabilities for `regimes`, none for `converge`.
    pub fn effective_grid(&self) -> Vec<f64> {
        match (&self.grid, self.experiment) {
            (Some(g), _) => g.clone(),
            (None, Experiment::Regimes) => DEFAULT_REGIME_GRID.to_vec(),
            (None, Experiment::Converge) => vec![],
            (None, _) => default_grid(DEFAULT_GRID_POINTS),
        }
    }

    pub fn system_state(&self) -> DensityMatrix {
        DensityMatrix::from_bloch(self.system).expect("validated Bloch vector")
    }

    pub fn fiducial_state(&self) -> DensityMatrix {
        self.fiducial.map(|r| DensityMatrix::from_bloch(r).expect("validated Bloch vector")).unwrap_or_else(default_fiducial)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

fn range(field: &str, value: f64, lo: f64, hi: f64) -> Result<(), ConfigError> {
    if value.is_finite() && (lo..=hi).contains(&value) {
        Ok(())
    } else {
        Err(ConfigError::Range { field: field.to_string(), value: value.to_string(), lo: lo.to_string(), hi: hi.to_string() })
    }
}

fn bloch(field: &str, r: [f64; 3]) -> Result<(), ConfigError> {
    let len = r.iter().map(|x| x * x).sum::<f64>().sqrt();
    range(&format!("{field} (length)"), len, 0.0, 1.0)
}

/// Parses, fills defaults and validates ranges.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut config: ExperimentConfig = serde_json::from_str(text).map_err(ConfigError::from)?;
    fill_defaults(&mut config);
    validate(&config)?;
    Ok(config)
}

fn fill_defaults(config: &mut ExperimentConfig) {
    let size = config.experiment.default_reservoir_size();
    let n = config.init.n_qubits_mut();
    if n.is_none() {
        *n = Some(size);
    }
    if config.grid.is_none() && config.experiment != Experiment::Converge {
        config.grid = Some(config.effective_grid());
    }
}

pub fn validate(config: &ExperimentConfig) -> Result<(), ConfigError> {
    let init = &config.init;
    let n_qubits = init.n_qubits();
    range("init.n_qubits", n_qubits as f64, init.min_qubits() as f64, 10.0)?;
    match *init {
        InitConfig::Product { xi, .. } => bloch("init.xi", xi)?,
        InitConfig::PerturbedGhz { alpha, .. } => range("init.alpha", alpha, 0.0, 1.0)?,
        InitConfig::XErrorGhz { site, .. } => range("init.site", site as f64, 1.0, n_qubits as f64)?,
        _ => {}
    }
    bloch("system", config.system)?;
    if let Some(f) = config.fiducial {
        bloch("fiducial", f)?;
    }
    range("n_steps", config.n_steps as f64, 1.0, 1e6)?;
    range("n_trajectories", config.n_trajectories as f64, 1.0, 1e6)?;
    match config.eta {
        EtaConfig::Fixed { value } => range("eta.value", value, 0.0, FRAC_PI_2)?,
        EtaConfig::Uniform => {}
        EtaConfig::Gaussian { mean, stddev } => {
            range("eta.mean", mean, 0.0, FRAC_PI_2)?;
            range("eta.stddev", stddev, 0.0, f64::MAX)?;
        }
    }

    let grid = config.effective_grid();
    match config.experiment {
        Experiment::Converge => {
            if config.grid.is_some() {
                return Err(ConfigError::Invalid { field: "grid".into(), reason: "converge runs take no grid".into() });
            }
            // Correlated reservoirs are not extended: the system meets ancillas 1, 3, ..., 2 n_steps - 1.
            if !init.is_product() && 2 * config.n_steps - 1 > n_qubits {
                return Err(ConfigError::Invalid {
                    field: "n_steps".into(),
                    reason: format!("{} steps need {} ancillas, the reservoir has {n_qubits}", config.n_steps, 2 * config.n_steps - 1),
                });
            }
        }
        Experiment::GapCurve | Experiment::Crossing => {
            range("init.n_qubits", n_qubits as f64, 3.0, 10.0)?;
            check_grid(&grid, FRAC_PI_2)?;
        }
        Experiment::Regimes => {
            range("n_steps", config.n_steps as f64, 1.0, 1e4)?;
            check_grid(&grid, 1.0)?;
        }
    }
    Ok(())
}

fn check_grid(grid: &[f64], hi: f64) -> Result<(), ConfigError> {
    if grid.is_empty() {
        return Err(ConfigError::Invalid { field: "grid".into(), reason: "empty grid".into() });
    }
    for (i, &x) in grid.iter().enumerate() {
        range(&format!("grid[{i}]"), x, 0.0, hi)?;
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ConfigError::Invalid { field: "grid".into(), reason: "values must be strictly increasing".into() });
    }
    Ok(())
}
