//! Matérn-3/2 Gaussian process regression in the plane.
//!
//! The kernel is `k(a, b) = s2 (1 + r) exp(-r)` with the anisotropic distance
//! `r^2 = (a - b)^T M (a - b)`, `M = diag(3 / l0^2, 3 / l1^2)`. The prior mean is
//! zero; callers that want a different baseline subtract it from the data
//! before conditioning. Noise is a standard deviation `sigma`, entering the
//! covariance as `sigma^2 I`.

mod kernel;
mod likelihood;
mod optimize;
mod posterior;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Vec2;
pub use kernel::{covariance_matrix, kernel, kernel_gradient};
pub use likelihood::{log_marginal_likelihood, pooled_log_likelihood};
pub use optimize::{fit_hyperparameters, FitOptions, FitReport, StartSummary};
pub use posterior::{GpPosterior, KStarStar};

/// Two points closer than this on both axes are treated as the same point.
pub const COINCIDENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GpError {
    #[error("invalid kernel parameters: {0}")]
    InvalidParams(String),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("covariance matrix is not positive definite even with jitter {max_jitter:e}")]
    IllConditioned { max_jitter: f64 },
    #[error("kernel gradient is undefined at coincident points")]
    CoincidentPoint,
    #[error("posterior needs at least one conditioning point")]
    EmptyConditioningSet,
    #[error("posterior variance {0:e} is negative beyond round-off")]
    NegativeVariance(f64),
    #[error("hyperparameter fit failed: no evaluation was well conditioned")]
    FitFailed { best: Option<(KernelParams, f64)> },
}

/// Matérn-3/2 hyperparameters: process variance `sigma2_k` ((mg/m³)²) and
/// per-axis length scales `l0`, `l1` in field units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelParams {
    pub sigma2_k: f64,
    pub l0: f64,
    pub l1: f64,
}

impl KernelParams {
    pub fn new(sigma2_k: f64, l0: f64, l1: f64) -> Result<Self, GpError> {
        let p = Self { sigma2_k, l0, l1 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), GpError> {
        for (name, v) in [
            ("sigma2_k", self.sigma2_k),
            ("l0", self.l0),
            ("l1", self.l1),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(GpError::InvalidParams(format!(
                    "{name} = {v} must be finite and > 0"
                )));
            }
        }
        Ok(())
    }

    /// Diagonal of `M`.
    pub fn metric(&self) -> [f64; 2] {
        [3.0 / (self.l0 * self.l0), 3.0 / (self.l1 * self.l1)]
    }

    pub(crate) fn to_log(self) -> [f64; 3] {
        [self.sigma2_k.ln(), self.l0.ln(), self.l1.ln()]
    }

    pub(crate) fn from_log(theta: [f64; 3]) -> Self {
        Self {
            sigma2_k: theta[0].exp(),
            l0: theta[1].exp(),
            l1: theta[2].exp(),
        }
    }
}

/// Measurement noise standard deviation in mg/m³.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NoiseModel {
    pub sigma: f64,
}

impl NoiseModel {
    pub fn new(sigma: f64) -> Result<Self, GpError> {
        if sigma.is_finite() && sigma >= 0.0 {
            Ok(Self { sigma })
        } else {
            Err(GpError::InvalidParams(format!(
                "noise sigma = {sigma} must be finite and >= 0"
            )))
        }
    }

    pub fn variance(&self) -> f64 {
        self.sigma * self.sigma
    }
}

/// Positions and concentrations used for hyperparameter fitting.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    positions: Vec<Vec2>,
    values: Vec<f64>,
}

impl TrainingSet {
    pub fn new(positions: Vec<Vec2>, values: Vec<f64>) -> Result<Self, GpError> {
        if positions.len() != values.len() {
            return Err(GpError::InvalidData(format!(
                "{} positions but {} values",
                positions.len(),
                values.len()
            )));
        }
        if positions.len() < 2 {
            return Err(GpError::InvalidData(
                "a training set needs at least 2 points".into(),
            ));
        }
        if positions
            .iter()
            .any(|p| !(p.x.is_finite() && p.y.is_finite()))
        {
            return Err(GpError::InvalidData("non-finite position".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(GpError::InvalidData("non-finite value".into()));
        }
        Ok(Self { positions, values })
    }

    pub fn positions(&self) -> &[Vec2] {
        &self.positions
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Copy with `offset` subtracted from every value.
    pub fn centered(&self, offset: f64) -> Self {
        Self {
            positions: self.positions.clone(),
            values: self.values.iter().map(|v| v - offset).collect(),
        }
    }
}

/// On-disk result of a hyperparameter fit, reusable as a mission's kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FittedHyperparams {
    pub sigma2_k: f64,
    pub l0: f64,
    pub l1: f64,
    pub noise_sigma: f64,
    pub lml: f64,
    pub n_train: usize,
}

impl FittedHyperparams {
    pub fn kernel(&self) -> Result<KernelParams, GpError> {
        KernelParams::new(self.sigma2_k, self.l0, self.l1)
    }
}
