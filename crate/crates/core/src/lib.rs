//! Closed-loop front tracking for a simulated survey vehicle.
//!
//! The crate estimates the local gradient of a scalar concentration field from a
//! sliding window of point measurements (a Matérn-3/2 Gaussian process, or a
//! planar least-squares fit as the baseline), steers a turn-rate-limited
//! vehicle along a chosen level set of the field with a seek/follow guidance
//! law, and evaluates tracking and gradient errors over single missions or
//! sensor-noise sweeps.
//!
//! Module map:
//!
//! * [`field`]: gridded and synthetic concentration fields, bilinear queries,
//!   true gradients, spatial scaling, grid file formats.
//! * [`gp`]: kernel, log marginal likelihood, hyperparameter fitting, posterior.
//! * [`estimators`]: measurement window and the gradient estimator registry.
//! * [`control`]: measurement/gradient filters and the seek/follow law.
//! * [`vehicle`]: kinematic vehicle, chlorophyll sensor, position noise.
//! * [`mission`]: the per-tick closed loop, logs and metrics.
//! * [`sweep`]: the sensor-noise sensitivity harness and its exports.

pub mod control;
pub mod estimators;
pub mod field;
pub mod geometry;
pub mod gp;
pub mod mission;
pub mod sweep;
pub mod vehicle;

pub use geometry::Vec2;
