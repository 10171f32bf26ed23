use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use superchan::simulator::theta_for_tangle;
use superchan::superchannel::PrepGrid;
use superchan::tomography::{Method, DEFAULT_BETA, DEFAULT_OUTCOMES};
use superchan::{ExperimentSpec, Interaction};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    /// w = sqrt(N / (p (1 − p))) per record.
    #[default]
    Statistical,
    Uniform,
}

/// Settings shared by every command. Loaded from a JSON file, then
/// overridden by command-line flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentSpec,
    /// Tangle of the initial state; overrides `experiment.theta` when set.
    pub tau: Option<f64>,
    pub method: Method,
    pub beta: f64,
    pub outcomes: usize,
    pub weights: WeightMode,
    pub mle_tol: f64,
    pub mle_max_iter: usize,
    pub diamond_tol: f64,
    pub grid: PrepGrid,
    /// Targets for `sweep`; all three when empty.
    pub targets: Vec<Interaction>,
    /// τ grid for `sweep`; the default grid when empty.
    pub taus: Vec<f64>,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentSpec::default(),
            tau: None,
            method: Method::Mle,
            beta: DEFAULT_BETA,
            outcomes: DEFAULT_OUTCOMES,
            weights: WeightMode::Statistical,
            mle_tol: 1e-6,
            mle_max_iter: 200_000,
            diamond_tol: 1e-6,
            grid: PrepGrid::default(),
            targets: Vec::new(),
            taus: Vec::new(),
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Resolves `tau` into θ and checks every field.
    pub fn finish(mut self) -> Result<Self, CliError> {
        if let Some(tau) = self.tau {
            self.experiment.theta = theta_for_tangle(tau).map_err(|e| CliError::Config(format!("tau: {e}")))?;
        }
        self.experiment.validate().map_err(|e| CliError::Config(format!("experiment: {e}")))?;
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(CliError::Config(format!("beta must be positive, got {}", self.beta)));
        }
        if self.outcomes < 2 {
            return Err(CliError::Config(format!("outcomes must be at least 2, got {}", self.outcomes)));
        }
        for (name, tol) in [("mle_tol", self.mle_tol), ("diamond_tol", self.diamond_tol)] {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(CliError::Config(format!("{name} must be positive, got {tol}")));
            }
        }
        if let Some(bad) = self.taus.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(CliError::Config(format!("taus: {bad} is outside [0, 1]")));
        }
        if self.grid.n_theta == 0 || self.grid.n_phi == 0 {
            return Err(CliError::Config("grid must have at least one point in each direction".into()));
        }
        Ok(self)
    }
}
