use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{SweepConfig, SweepError};
use crate::estimators::EstimatorRegistry;
use crate::gp::NoiseModel;
use crate::mission::{
    metrics_from_records, run_resolved, MetricsOptions, MissionLog, MissionOutcome,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateKey {
    pub sigma: f64,
    pub estimator: String,
    pub replicate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ReplicateOutcome {
    Ok {
        /// RMS of |delta - delta_ref| over settled tracking ticks.
        rms_tracking_error: f64,
        max_tracking_error: f64,
        /// Mean gradient angle error, rad.
        mean_angle_error: f64,
        tracking_ticks: usize,
        /// `completed` or `exited_domain`.
        mission: String,
        noise_checksum: String,
    },
    Failed {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub replicate: usize,
    pub sensor_seed: u64,
    pub position_seed: u64,
    #[serde(flatten)]
    pub outcome: ReplicateOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub sigma: f64,
    pub estimator: String,
    pub succeeded: usize,
    pub rms_tracking_mean: Option<f64>,
    pub rms_tracking_std: Option<f64>,
    pub angle_error_mean: Option<f64>,
    pub angle_error_std: Option<f64>,
    /// Set when no replicate produced metrics.
    pub failure: Option<String>,
    pub replicates: Vec<ReplicateResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// Ordered by sigma, then estimator as configured.
    pub cells: Vec<CellResult>,
}

impl SweepResult {
    pub fn cell(&self, sigma: f64, estimator: &str) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.sigma == sigma && c.estimator == estimator)
    }

    /// Replicate means of one estimator's metric, in sigma order.
    pub fn series(&self, estimator: &str, angle: bool) -> Vec<(f64, Option<f64>)> {
        self.cells
            .iter()
            .filter(|c| c.estimator == estimator)
            .map(|c| {
                let v = if angle {
                    c.angle_error_mean
                } else {
                    c.rms_tracking_mean
                };
                (c.sigma, v)
            })
            .collect()
    }
}

/// Stores finished replicates so an interrupted sweep can resume.
pub trait ReplicateCache: Sync {
    fn load(&self, key: &ReplicateKey) -> Option<ReplicateResult>;
    /// `log` is absent when the mission could not start.
    fn store(&self, key: &ReplicateKey, result: &ReplicateResult, log: Option<&MissionLog>);
}

pub struct NoCache;

impl ReplicateCache for NoCache {
    fn load(&self, _: &ReplicateKey) -> Option<ReplicateResult> {
        None
    }
    fn store(&self, _: &ReplicateKey, _: &ReplicateResult, _: Option<&MissionLog>) {}
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Sensor and position seeds of a replicate; independent of sigma and
/// estimator so paired cells see the same draws.
pub fn replicate_seeds(root: u64, replicate: usize) -> (u64, u64) {
    let base = splitmix64(root ^ splitmix64(replicate as u64));
    (splitmix64(base), splitmix64(base ^ 1))
}

pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult, SweepError> {
    run_sweep_with(config, &EstimatorRegistry::with_builtins(), &NoCache)
}

/// Runs every cell in parallel. Only an invalid config or an unloadable
/// base mission is an error; mission failures are recorded per replicate.
pub fn run_sweep_with(
    config: &SweepConfig,
    registry: &EstimatorRegistry,
    cache: &dyn ReplicateCache,
) -> Result<SweepResult, SweepError> {
    config.validate()?;
    for name in &config.estimators {
        if !registry.contains(name) {
            return Err(SweepError::Config(format!(
                "unknown estimator `{name}` (registered: {})",
                registry.names().collect::<Vec<_>>().join(", ")
            )));
        }
    }
    let resolved = config.base.resolve()?;
    let opts = MetricsOptions {
        delta_ref: config.base.control.delta_ref,
        settle_time: config.settle_time,
    };

    let keys: Vec<ReplicateKey> = config
        .sigma_grid
        .iter()
        .flat_map(|&sigma| {
            config.estimators.iter().flat_map(move |est| {
                (0..config.replicates).map(move |replicate| ReplicateKey {
                    sigma,
                    estimator: est.clone(),
                    replicate,
                })
            })
        })
        .collect();

    let results: Vec<ReplicateResult> = keys
        .par_iter()
        .map(|key| {
            if let Some(hit) = cache.load(key) {
                return hit;
            }
            let (sensor_seed, position_seed) = replicate_seeds(config.seed, key.replicate);
            let mut mission = resolved.clone();
            let cfg = &mut mission.config;
            cfg.estimator = key.estimator.clone();
            cfg.sensor.sigma = key.sigma;
            cfg.sensor.seed = sensor_seed;
            cfg.position_noise.seed = position_seed;
            if config.match_gp_noise {
                cfg.gp_noise = NoiseModel { sigma: key.sigma };
            }
            if config.disable_measurement_filter {
                cfg.measurement_filter = false;
            }
            let (outcome, log) = match run_resolved(&mission, registry) {
                Ok(log) => (summarize(&log, &opts), Some(log)),
                Err(e) => (
                    ReplicateOutcome::Failed {
                        reason: e.to_string(),
                    },
                    None,
                ),
            };
            let result = ReplicateResult {
                replicate: key.replicate,
                sensor_seed,
                position_seed,
                outcome,
            };
            cache.store(key, &result, log.as_ref());
            result
        })
        .collect();

    let cells = results
        .chunks(config.replicates)
        .zip(keys.chunks(config.replicates))
        .map(|(reps, ks)| aggregate(ks[0].sigma, &ks[0].estimator, reps.to_vec()))
        .collect();
    Ok(SweepResult { cells })
}

fn summarize(log: &MissionLog, opts: &MetricsOptions) -> ReplicateOutcome {
    let mission = match &log.outcome {
        MissionOutcome::Completed => "completed",
        MissionOutcome::ExitedDomain { .. } => "exited_domain",
        MissionOutcome::Aborted { reason, .. } => {
            return ReplicateOutcome::Failed {
                reason: format!("mission aborted: {reason}"),
            }
        }
    };
    let report = match metrics_from_records(&log.records, opts) {
        Ok(r) => r,
        Err(e) => {
            return ReplicateOutcome::Failed {
                reason: e.to_string(),
            }
        }
    };
    let Some(angle) = report.angle_error else {
        return ReplicateOutcome::Failed {
            reason: "no tick had both a true and an estimated gradient".into(),
        };
    };
    ReplicateOutcome::Ok {
        rms_tracking_error: report.tracking_error.rms,
        max_tracking_error: report.tracking_error.max,
        mean_angle_error: angle.mean,
        tracking_ticks: report.tracking_ticks,
        mission: mission.into(),
        noise_checksum: log.noise_checksum.clone(),
    }
}

fn mean_std(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() < 2 {
        0.0
    } else {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    (Some(mean), Some(std))
}

fn aggregate(sigma: f64, estimator: &str, replicates: Vec<ReplicateResult>) -> CellResult {
    let mut rms = Vec::new();
    let mut angle = Vec::new();
    let mut reasons = Vec::new();
    for r in &replicates {
        match &r.outcome {
            ReplicateOutcome::Ok {
                rms_tracking_error,
                mean_angle_error,
                ..
            } => {
                rms.push(*rms_tracking_error);
                angle.push(*mean_angle_error);
            }
            ReplicateOutcome::Failed { reason } => reasons.push(reason.clone()),
        }
    }
    let (rms_tracking_mean, rms_tracking_std) = mean_std(&rms);
    let (angle_error_mean, angle_error_std) = mean_std(&angle);
    CellResult {
        sigma,
        estimator: estimator.to_string(),
        succeeded: rms.len(),
        rms_tracking_mean,
        rms_tracking_std,
        angle_error_mean,
        angle_error_std,
        failure: if rms.is_empty() {
            Some(reasons.first().cloned().unwrap_or_default())
        } else {
            None
        },
        replicates,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_depend_only_on_root_and_replicate() {
        assert_eq!(replicate_seeds(0, 3), replicate_seeds(0, 3));
        assert_ne!(replicate_seeds(0, 3), replicate_seeds(0, 4));
        assert_ne!(replicate_seeds(0, 3), replicate_seeds(1, 3));
        let (a, b) = replicate_seeds(7, 0);
        assert_ne!(a, b);
    }

    #[test]
    fn mean_and_sample_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, Some(2.0));
        assert_eq!(s, Some(1.0));
        assert_eq!(mean_std(&[4.0]), (Some(4.0), Some(0.0)));
        assert_eq!(mean_std(&[]), (None, None));
    }

    #[test]
    fn all_failed_cell_carries_reason() {
        let reps = vec![ReplicateResult {
            replicate: 0,
            sensor_seed: 1,
            position_seed: 2,
            outcome: ReplicateOutcome::Failed {
                reason: "boom".into(),
            },
        }];
        let c = aggregate(0.01, "gp", reps);
        assert_eq!(c.succeeded, 0);
        assert_eq!(c.failure.as_deref(), Some("boom"));
        assert_eq!(c.rms_tracking_mean, None);
    }
}
