//! TOML run configuration. Sections: [physical], [simulation], [meanfield],
//! [design]. Unknown keys anywhere are errors.

use serde::{Deserialize, Serialize};

use crate::design::DesignInput;
use crate::error::{BeamLaserError, Result};
use crate::langevin::SimOptions;
use crate::params::PhysicalParams;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub physical: Option<PhysicalParams>,
    pub simulation: Option<SimulationConfig>,
    pub meanfield: Option<MeanFieldConfig>,
    pub design: Option<DesignInput>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    /// Total integration time in units of tau.
    pub total_time: f64,
    /// Record the collective dipole every this many injection intervals.
    #[serde(default = "default_stride")]
    pub sample_stride: usize,
    /// Integration sub-steps per injection interval.
    #[serde(default = "default_n_sub")]
    pub n_sub: usize,
    #[serde(default = "default_true")]
    pub cavity_noise: bool,
    #[serde(default)]
    pub spont_noise: bool,
    /// Start of the steady-state analysis window, units of tau.
    #[serde(default = "default_t0")]
    pub t0: f64,
    /// Longest correlation lag to keep, units of tau.
    #[serde(default = "default_max_lag")]
    pub max_lag: f64,
    #[serde(default = "default_n_traj")]
    pub n_traj: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_stride() -> usize {
    1
}
fn default_n_sub() -> usize {
    1
}
fn default_true() -> bool {
    true
}
fn default_t0() -> f64 {
    10.0
}
fn default_max_lag() -> f64 {
    50.0
}
fn default_n_traj() -> usize {
    50
}

impl SimulationConfig {
    pub fn options(&self) -> SimOptions {
        SimOptions {
            total_time: self.total_time,
            sample_stride: self.sample_stride,
            n_sub: self.n_sub,
            cavity_noise: self.cavity_noise,
            spont_noise: self.spont_noise,
            coherent_init: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanFieldConfig {
    pub flux_min: f64,
    pub flux_max: f64,
    pub flux_steps: usize,
    pub doppler_min: f64,
    pub doppler_max: f64,
    pub doppler_steps: usize,
    /// When present the sweep also fills the pulling column.
    pub kappa_tau: Option<f64>,
    /// Emit threshold_flux vs doppler_param instead of the full grid.
    #[serde(default)]
    pub threshold_trace: bool,
}

pub fn parse(text: &str) -> Result<Config> {
    toml::from_str(text).map_err(|e| BeamLaserError::Config(e.to_string()))
}

pub fn load(path: &std::path::Path) -> Result<Config> {
    let text = std::fs::read_to_string(path)?;
    parse(&text)
}
