use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::MissionError;
use crate::control::ControlParams;
use crate::estimators::{EstimatorSettings, DEFAULT_MIN_SAMPLES};
use crate::field::{load_grid, scale_field, FieldScale, GridFormat, ScalarField, SyntheticField};
use crate::gp::{FittedHyperparams, KernelParams, NoiseModel};
use crate::vehicle::{PositionNoise, SensorModel, VehicleParams};
use crate::Vec2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSource {
    pub path: PathBuf,
    /// Guessed from the extension when absent.
    #[serde(default)]
    pub format: Option<GridFormat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSource {
    Synthetic(SyntheticField),
    Grid(GridSource),
}

impl FieldSource {
    pub fn load(&self) -> Result<Arc<dyn ScalarField>, MissionError> {
        Ok(match self {
            FieldSource::Synthetic(f) => {
                f.validate()?;
                Arc::new(f.clone())
            }
            FieldSource::Grid(g) => {
                let format = g.format.unwrap_or_else(|| GridFormat::from_path(&g.path));
                Arc::new(load_grid(&g.path, format)?)
            }
        })
    }

    fn rebase(&mut self, base: &Path) {
        if let FieldSource::Grid(g) = self {
            if g.path.is_relative() {
                g.path = base.join(&g.path);
            }
        }
    }
}

fn default_trigger_band() -> f64 {
    0.5
}
fn default_estimator() -> String {
    "gp".into()
}
fn default_window() -> usize {
    200
}
fn default_min_samples() -> usize {
    DEFAULT_MIN_SAMPLES
}
fn default_true() -> bool {
    true
}
fn default_gradient_alpha() -> f64 {
    0.97
}
fn default_gp_noise() -> NoiseModel {
    NoiseModel { sigma: 1e-3 }
}
fn default_max_failures() -> usize {
    60
}

/// Declarative description of one mission. Units: positions in field units,
/// times in seconds, concentrations in mg/m³, angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionConfig {
    pub field: FieldSource,
    #[serde(default)]
    pub field_scale: Option<FieldScale>,
    /// Inline kernel hyperparameters.
    #[serde(default)]
    pub kernel: Option<KernelParams>,
    /// Fitted hyperparameter JSON; used when `kernel` is absent.
    #[serde(default)]
    pub kernel_file: Option<PathBuf>,
    /// Noise level assumed by the GP, independent of the simulated sensor.
    #[serde(default = "default_gp_noise")]
    pub gp_noise: NoiseModel,
    /// Subtracted from measurements before GP conditioning; `delta_ref` when absent.
    #[serde(default)]
    pub prior_mean: Option<f64>,
    #[serde(default)]
    pub control: ControlParams,
    #[serde(default)]
    pub vehicle: VehicleParams,
    #[serde(default)]
    pub sensor: SensorModel,
    #[serde(default)]
    pub position_noise: PositionNoise,
    pub start: [f64; 2],
    pub initial_heading: f64,
    /// Initial state of the gradient low-pass, set when tracking starts.
    /// Defaults to the initial heading, flipped when the vehicle starts above
    /// `delta_ref`.
    #[serde(default)]
    pub initial_gradient: Option<[f64; 2]>,
    #[serde(default = "default_trigger_band")]
    pub trigger_band: f64,
    pub duration: f64,
    #[serde(default = "default_estimator")]
    pub estimator: String,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_min_samples")]
    pub min_samples: usize,
    /// Three-tap moving average on measurements before control.
    #[serde(default = "default_true")]
    pub measurement_filter: bool,
    #[serde(default = "default_gradient_alpha")]
    pub gradient_filter_alpha: f64,
    #[serde(default = "default_max_failures")]
    pub max_consecutive_failures: usize,
}

impl MissionConfig {
    /// A mission with every default and the given field and geometry.
    pub fn new(field: FieldSource, start: [f64; 2], initial_heading: f64, duration: f64) -> Self {
        Self {
            field,
            field_scale: None,
            kernel: None,
            kernel_file: None,
            gp_noise: default_gp_noise(),
            prior_mean: None,
            control: ControlParams::default(),
            vehicle: VehicleParams::default(),
            sensor: SensorModel::default(),
            position_noise: PositionNoise::default(),
            start,
            initial_heading,
            initial_gradient: None,
            trigger_band: default_trigger_band(),
            duration,
            estimator: default_estimator(),
            window: default_window(),
            min_samples: default_min_samples(),
            measurement_filter: true,
            gradient_filter_alpha: default_gradient_alpha(),
            max_consecutive_failures: default_max_failures(),
        }
    }

    /// Checks everything that does not need the field or kernel file.
    pub fn validate(&self) -> Result<(), MissionError> {
        let bad = |m: String| Err(MissionError::Config(m));
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return bad(format!("duration {} must be > 0", self.duration));
        }
        if !(self.trigger_band.is_finite() && self.trigger_band > 0.0) {
            return bad(format!("trigger_band {} must be > 0", self.trigger_band));
        }
        if self.window == 0 {
            return bad("window must hold at least one sample".into());
        }
        if !(self.start[0].is_finite() && self.start[1].is_finite()) {
            return bad("start must be finite".into());
        }
        if !self.initial_heading.is_finite() {
            return bad("initial_heading must be finite".into());
        }
        if let Some(g) = self.initial_gradient {
            if !(g[0].is_finite() && g[1].is_finite()) || (g[0] == 0.0 && g[1] == 0.0) {
                return bad("initial_gradient must be finite and nonzero".into());
            }
        }
        if !(0.0..1.0).contains(&self.gradient_filter_alpha) {
            return bad("gradient_filter_alpha must lie in [0, 1)".into());
        }
        if !(self.sensor.sigma.is_finite() && self.sensor.sigma >= 0.0) {
            return bad("sensor.sigma must be >= 0".into());
        }
        if !(self.position_noise.sigma_xy.is_finite() && self.position_noise.sigma_xy >= 0.0) {
            return bad("position_noise.sigma_xy must be >= 0".into());
        }
        if !(self.gp_noise.sigma.is_finite() && self.gp_noise.sigma >= 0.0) {
            return bad("gp_noise must be >= 0".into());
        }
        if self.max_consecutive_failures == 0 {
            return bad("max_consecutive_failures must be >= 1".into());
        }
        self.control.validate().map_err(MissionError::Config)?;
        self.vehicle.validate().map_err(MissionError::Config)?;
        if let Some(k) = &self.kernel {
            k.validate()?;
        }
        Ok(())
    }

    /// Makes relative file paths relative to `base` instead of the working
    /// directory.
    pub fn rebase_paths(&mut self, base: &Path) {
        self.field.rebase(base);
        if let Some(p) = &self.kernel_file {
            if p.is_relative() {
                self.kernel_file = Some(base.join(p));
            }
        }
    }

    pub fn kernel_params(&self) -> Result<Option<KernelParams>, MissionError> {
        if let Some(k) = self.kernel {
            return Ok(Some(k));
        }
        let Some(path) = &self.kernel_file else {
            return Ok(None);
        };
        let err = |message: String| MissionError::KernelFile {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let doc: FittedHyperparams = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
        Ok(Some(doc.kernel()?))
    }

    pub fn estimator_settings(&self, kernel: Option<KernelParams>) -> EstimatorSettings {
        EstimatorSettings {
            kernel,
            noise: self.gp_noise,
            prior_mean: self.prior_mean.unwrap_or(self.control.delta_ref),
            min_samples: self.min_samples,
        }
    }

    /// Loads the field (applying the scale) and the kernel.
    pub fn resolve(&self) -> Result<ResolvedMission, MissionError> {
        self.validate()?;
        let mut field = self.field.load()?;
        if let Some(scale) = self.field_scale {
            let scale = FieldScale::new(scale.factor())?;
            field = Arc::new(scale_field(field, scale));
        }
        let start = Vec2::new(self.start[0], self.start[1]);
        if !field.domain().contains(start) {
            return Err(MissionError::Config(format!(
                "start ({}, {}) lies outside the field domain",
                start.x, start.y
            )));
        }
        Ok(ResolvedMission {
            config: self.clone(),
            field,
            kernel: self.kernel_params()?,
        })
    }
}

/// A validated config with its field and kernel loaded.
#[derive(Debug, Clone)]
pub struct ResolvedMission {
    pub config: MissionConfig,
    pub field: Arc<dyn ScalarField>,
    pub kernel: Option<KernelParams>,
}
