//! Sensor-noise sensitivity sweeps: every (sigma, estimator, replicate) cell
//! runs one mission, cells at the same replicate share noise seeds, and the
//! per-cell metrics are aggregated into a [`SweepResult`].

mod export;
mod run;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mission::{MissionConfig, MissionError};
pub use export::{export, import, ExportFormat, CSV_COLUMNS};
pub use run::{
    replicate_seeds, run_sweep, run_sweep_with, CellResult, NoCache, ReplicateCache, ReplicateKey,
    ReplicateOutcome, ReplicateResult, SweepResult,
};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep config: {0}")]
    Config(String),
    #[error(transparent)]
    Mission(#[from] MissionError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..n)
                .map(|i| {
                    if i == 0 {
                        lo
                    } else if i == n - 1 {
                        hi
                    } else {
                        10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)
                    }
                })
                .collect()
        }
    }
}

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

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: MissionConfig,
    /// Sensor noise standard deviations, mg/m³, strictly increasing.
    #[serde(default = "default_sigma_grid")]
    pub sigma_grid: Vec<f64>,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<String>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Root of every replicate's noise seeds.
    #[serde(default)]
    pub seed: u64,
    /// Sets the GP noise model to each cell's sigma.
    #[serde(default = "default_true")]
    pub match_gp_noise: bool,
    /// Turns the three-tap measurement average off in every cell.
    #[serde(default = "default_true")]
    pub disable_measurement_filter: bool,
    /// Seconds after the tracking trigger excluded from the metrics.
    #[serde(default)]
    pub settle_time: f64,
}

impl SweepConfig {
    pub fn new(base: MissionConfig) -> Self {
        Self {
            base,
            sigma_grid: default_sigma_grid(),
            estimators: default_estimators(),
            replicates: default_replicates(),
            seed: 0,
            match_gp_noise: true,
            disable_measurement_filter: true,
            settle_time: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        let bad = |m: &str| Err(SweepError::Config(m.into()));
        if self.sigma_grid.is_empty() {
            return bad("sigma_grid is empty");
        }
        if self
            .sigma_grid
            .iter()
            .any(|s| !(s.is_finite() && *s >= 0.0))
        {
            return bad("sigma_grid values must be finite and >= 0");
        }
        if self.sigma_grid.windows(2).any(|w| w[1] <= w[0]) {
            return bad("sigma_grid must be strictly increasing");
        }
        if self.estimators.is_empty() {
            return bad("no estimators selected");
        }
        let mut names = self.estimators.clone();
        names.sort();
        names.dedup();
        if names.len() != self.estimators.len() {
            return bad("estimators are listed more than once");
        }
        if self.replicates == 0 {
            return bad("replicates must be >= 1");
        }
        if !(self.settle_time.is_finite() && self.settle_time >= 0.0) {
            return bad("settle_time must be >= 0");
        }
        self.base.validate()?;
        Ok(())
    }

    pub fn missions(&self) -> usize {
        self.sigma_grid.len() * self.estimators.len() * self.replicates
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_is_nine_log_points() {
        let g = default_sigma_grid();
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], 1e-3);
        assert_eq!(g[8], 1e-1);
        assert!((g[4] - 1e-2).abs() < 1e-15);
        for w in g.windows(2) {
            assert!((w[1] / w[0] - 10f64.powf(0.25)).abs() < 1e-12);
        }
    }
}
