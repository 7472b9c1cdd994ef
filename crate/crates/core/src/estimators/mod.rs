//! Gradient estimators over a sliding measurement window.
//!
//! Every estimator implements [`GradientEstimator`] and is constructed by
//! name through an [`EstimatorRegistry`]. The built-in entries are `gp`
//! (posterior-mean gradient of a Matérn-3/2 GP) and `lsq` (slope of a planar
//! least-squares fit).

mod gp;
mod lsq;
mod registry;
mod window;

use std::fmt::Debug;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gp::{GpError, KernelParams, NoiseModel};
use crate::Vec2;
pub use gp::{estimate_gp, GpEstimator};
pub use lsq::{estimate_lsq, LsqEstimator};
pub use registry::{EstimatorFactory, EstimatorRegistry};
pub use window::{MeasurementWindow, Sample};

/// Default number of usable samples before any estimate is attempted.
pub const DEFAULT_MIN_SAMPLES: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("timestamp {t} does not follow the last sample at {last}")]
    NonIncreasingTime { last: f64, t: f64 },
    #[error("window holds {have} usable samples, need {need}")]
    InsufficientData { have: usize, need: usize },
    #[error("sample positions are collinear; the plane slope is undetermined")]
    DegenerateGeometry,
    #[error("estimate is not finite")]
    NonFinite,
    #[error("estimator `{0}` needs kernel hyperparameters")]
    MissingKernel(&'static str),
    #[error("unknown estimator `{name}` (registered: {known})")]
    UnknownEstimator { name: String, known: String },
    #[error(transparent)]
    Gp(#[from] GpError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientEstimate {
    /// mg/m³ per field unit
    pub g: Vec2,
    pub at: Vec2,
    pub t: f64,
    pub method: &'static str,
}

pub trait GradientEstimator: Send + Sync + Debug {
    fn name(&self) -> &'static str;

    /// Estimates the field gradient at `p_star` from a snapshot of the window.
    fn estimate(
        &self,
        window: &MeasurementWindow,
        p_star: Vec2,
    ) -> Result<GradientEstimate, EstimatorError>;
}

/// Everything a registered estimator may need at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSettings {
    /// Required by `gp`, ignored by `lsq`.
    pub kernel: Option<KernelParams>,
    pub noise: NoiseModel,
    /// Constant subtracted from measurements before GP conditioning.
    pub prior_mean: f64,
    pub min_samples: usize,
}

fn finite_estimate(
    g: Vec2,
    at: Vec2,
    window: &MeasurementWindow,
    method: &'static str,
) -> Result<GradientEstimate, EstimatorError> {
    if !(g.x.is_finite() && g.y.is_finite()) {
        return Err(EstimatorError::NonFinite);
    }
    Ok(GradientEstimate {
        g,
        at,
        t: window.last_time().unwrap_or(f64::NAN),
        method,
    })
}
