use std::path::{Path, PathBuf};

use bloomtrack::gp::{FitOptions, KernelParams, NoiseModel};
use bloomtrack::mission::MissionConfig;
use bloomtrack::sweep::{log_grid, SweepConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.json");

fn default_sigma_grid() -> Vec<f64> {
    log_grid(1e-3, 1e-1, 9)
}
fn default_estimators() -> Vec<String> {
    vec!["gp".into(), "lsq".into()]
}
fn default_replicates() -> usize {
    5
}
fn default_true() -> bool {
    true
}
fn default_per_day() -> usize {
    500
}
fn default_fit_noise() -> NoiseModel {
    NoiseModel { sigma: 1e-3 }
}
fn default_init() -> KernelParams {
    KernelParams {
        sigma2_k: 1.0,
        l0: 1.0,
        l1: 1.0,
    }
}

/// The `sweep` section; the base mission is the file's `mission`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "default_sigma_grid")]
    pub sigma_grid: Vec<f64>,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<String>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub match_gp_noise: bool,
    #[serde(default = "default_true")]
    pub disable_measurement_filter: bool,
    #[serde(default)]
    pub settle_time: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields default")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    /// Grid files, one per training day.
    #[serde(default)]
    pub grids: Vec<PathBuf>,
    /// Points drawn per day.
    #[serde(default = "default_per_day")]
    pub per_day: usize,
    #[serde(default = "default_fit_noise")]
    pub noise: NoiseModel,
    #[serde(default = "default_init")]
    pub init: KernelParams,
    #[serde(default)]
    pub options: FitOptions,
}

impl Default for FitSection {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields default")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsSection {
    /// Seconds after the tracking trigger excluded from mission metrics.
    pub settle_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    #[serde(default)]
    pub mission: Option<MissionConfig>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub fit: Option<FitSection>,
    #[serde(default)]
    pub metrics: MetricsSection,
}

impl RunConfigFile {
    /// Reads a config file; relative paths inside it resolve against its
    /// directory. Without a path the bundled default is used.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Self::parse(DEFAULT_CONFIG, "<default config>", None);
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string(), path.parent())
    }

    pub fn parse(text: &str, origin: &str, base: Option<&Path>) -> Result<Self, CliError> {
        let mut cfg: RunConfigFile =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
        if let Some(base) = base {
            if let Some(m) = cfg.mission.as_mut() {
                m.rebase_paths(base);
            }
            if let Some(f) = cfg.fit.as_mut() {
                for g in &mut f.grids {
                    if g.is_relative() {
                        *g = base.join(&*g);
                    }
                }
            }
        }
        Ok(cfg)
    }

    pub fn mission(&self) -> Result<&MissionConfig, CliError> {
        self.mission
            .as_ref()
            .ok_or_else(|| CliError::Config("config has no `mission` section".into()))
    }

    pub fn sweep_config(&self) -> Result<SweepConfig, CliError> {
        let s = self.sweep.clone().unwrap_or_default();
        Ok(SweepConfig {
            base: self.mission()?.clone(),
            sigma_grid: s.sigma_grid,
            estimators: s.estimators,
            replicates: s.replicates,
            seed: s.seed,
            match_gp_noise: s.match_gp_noise,
            disable_measurement_filter: s.disable_measurement_filter,
            settle_time: s.settle_time,
        })
    }
}
