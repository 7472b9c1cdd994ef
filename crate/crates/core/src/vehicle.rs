//! Planar kinematic vehicle, chlorophyll sensor and position reports.
//!
//! The vehicle is a constant-speed unicycle whose heading may change by at
//! most `max_turn_rate * dt` per step. All noise comes from ChaCha streams
//! keyed by explicit seeds, one Gaussian draw per call, so equal seeds give
//! bit-identical sequences.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::control::ControlCommand;
use crate::field::{FieldError, ScalarField};
use crate::geometry::wrap_angle;
use crate::Vec2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    /// Field units.
    pub p: Vec2,
    /// Radians in (-pi, pi].
    pub heading: f64,
    /// m/s
    pub speed: f64,
}

impl VehicleState {
    pub fn new(p: Vec2, heading: f64, speed: f64) -> Self {
        Self {
            p,
            heading: wrap_angle(heading),
            speed: speed.max(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VehicleParams {
    /// rad/s; `inf` makes the vehicle holonomic in heading.
    pub max_turn_rate: f64,
    /// s
    pub dt: f64,
    /// Meters per field unit.
    pub unit_scale: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            max_turn_rate: 0.1,
            dt: 1.0,
            unit_scale: 1.0,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_turn_rate.is_nan() || self.max_turn_rate <= 0.0 {
            return Err("max_turn_rate must be > 0".into());
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err("dt must be > 0".into());
        }
        if !(self.unit_scale.is_finite() && self.unit_scale > 0.0) {
            return Err("unit_scale must be > 0".into());
        }
        Ok(())
    }
}

/// Turns toward the command direction (clamped) and advances one step.
pub fn step(
    state: &VehicleState,
    command: &ControlCommand,
    params: &VehicleParams,
) -> VehicleState {
    step_toward(state, command.heading(), command.u.norm(), params)
}

/// Same as [`step`] with the desired heading and speed given directly.
pub fn step_toward(
    state: &VehicleState,
    desired_heading: f64,
    speed: f64,
    params: &VehicleParams,
) -> VehicleState {
    let max_turn = params.max_turn_rate * params.dt;
    let turn = wrap_angle(desired_heading - state.heading).clamp(-max_turn, max_turn);
    let heading = wrap_angle(state.heading + turn);
    let dist = speed * params.dt / params.unit_scale;
    VehicleState {
        p: state.p + Vec2::new(heading.cos(), heading.sin()) * dist,
        heading,
        speed,
    }
}

/// Seeded Gaussian stream, one standard-normal draw per call.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn next_standard(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorModel {
    /// Measurement noise standard deviation, mg/m³.
    pub sigma: f64,
    pub seed: u64,
}

impl Default for SensorModel {
    fn default() -> Self {
        Self {
            sigma: 1e-3,
            seed: 1,
        }
    }
}

/// A running chlorophyll sensor: model plus its noise stream.
#[derive(Debug, Clone)]
pub struct Sensor {
    pub model: SensorModel,
    stream: NoiseStream,
}

impl Sensor {
    pub fn new(model: SensorModel) -> Self {
        Self {
            model,
            stream: NoiseStream::new(model.seed),
        }
    }

    /// Field value at the vehicle plus Gaussian noise. Returns the reading
    /// and the standard-normal draw that produced the noise.
    pub fn sense(
        &mut self,
        field: &dyn ScalarField,
        state: &VehicleState,
    ) -> Result<(f64, f64), FieldError> {
        let truth = field.value_at(state.p)?;
        let z = self.stream.next_standard();
        Ok((truth + self.model.sigma * z, z))
    }
}

pub fn sense(
    field: &dyn ScalarField,
    state: &VehicleState,
    sensor: &mut Sensor,
) -> Result<f64, FieldError> {
    sensor.sense(field, state).map(|(v, _)| v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PositionNoise {
    /// Per-axis standard deviation in field units; 0 disables.
    pub sigma_xy: f64,
    pub seed: u64,
}

impl Default for PositionNoise {
    fn default() -> Self {
        Self {
            sigma_xy: 0.0,
            seed: 2,
        }
    }
}

/// GPS-like position reports.
#[derive(Debug, Clone)]
pub struct PositionReporter {
    pub model: PositionNoise,
    stream: NoiseStream,
}

impl PositionReporter {
    pub fn new(model: PositionNoise) -> Self {
        Self {
            model,
            stream: NoiseStream::new(model.seed),
        }
    }

    pub fn report(&mut self, state: &VehicleState) -> Vec2 {
        self.report_with_draws(state).0
    }

    /// The report plus the two standard-normal draws behind it.
    pub fn report_with_draws(&mut self, state: &VehicleState) -> (Vec2, [f64; 2]) {
        let zx = self.stream.next_standard();
        let zy = self.stream.next_standard();
        (state.p + Vec2::new(zx, zy) * self.model.sigma_xy, [zx, zy])
    }
}

pub fn report_position(state: &VehicleState, reporter: &mut PositionReporter) -> Vec2 {
    reporter.report(state)
}
