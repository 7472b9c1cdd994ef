//! Seek/follow guidance toward a level set, with its input filters.
//!
//! The raw command is `u = -a_seek (delta - delta_ref) grad + a_follow R grad`
//! where `R` rotates by a quarter turn. Only its direction is used; the
//! vehicle is commanded at the constant speed `v`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Vec2;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RotationSense {
    #[default]
    Ccw,
    Cw,
}

impl RotationSense {
    pub fn rotate(self, v: Vec2) -> Vec2 {
        match self {
            RotationSense::Ccw => Vec2::new(-v.y, v.x),
            RotationSense::Cw => Vec2::new(v.y, -v.x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlParams {
    /// Reference level of the tracked front, mg/m³.
    pub delta_ref: f64,
    pub alpha_seek: f64,
    pub alpha_follow: f64,
    /// Commanded speed, m/s.
    pub speed: f64,
    pub rotation_sense: RotationSense,
}

impl Default for ControlParams {
    fn default() -> Self {
        Self {
            delta_ref: 7.45,
            alpha_seek: 10.0,
            alpha_follow: 1.0,
            speed: 1.0,
            rotation_sense: RotationSense::Ccw,
        }
    }
}

impl ControlParams {
    pub fn validate(&self) -> Result<(), String> {
        if !self.delta_ref.is_finite() {
            return Err("delta_ref must be finite".into());
        }
        if !(self.alpha_seek.is_finite() && self.alpha_seek >= 0.0) {
            return Err("alpha_seek must be >= 0".into());
        }
        if !(self.alpha_follow.is_finite() && self.alpha_follow > 0.0) {
            return Err("alpha_follow must be > 0".into());
        }
        if !(self.speed.is_finite() && self.speed > 0.0) {
            return Err("speed must be > 0".into());
        }
        Ok(())
    }
}

/// Weighted moving average over the last three measurements.
///
/// During warm-up the available weights are renormalized so the DC gain
/// stays 1.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasFilter {
    /// Oldest first: `(w_-2, w_-1, w_0)`.
    weights: [f64; 3],
    history: Vec<f64>,
}

impl Default for MeasFilter {
    fn default() -> Self {
        Self::new([0.2, 0.3, 0.5]).expect("default weights are valid")
    }
}

impl MeasFilter {
    pub fn new(weights: [f64; 3]) -> Result<Self, String> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err("filter weights must be finite and >= 0".into());
        }
        if (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err("filter weights must sum to 1".into());
        }
        Ok(Self {
            weights,
            history: Vec::with_capacity(2),
        })
    }

    pub fn weights(&self) -> [f64; 3] {
        self.weights
    }

    pub fn apply(&mut self, delta_raw: f64) -> f64 {
        let used = &self.weights[2 - self.history.len()..];
        let norm: f64 = used.iter().sum();
        let out = self
            .history
            .iter()
            .chain(std::iter::once(&delta_raw))
            .zip(used)
            .map(|(d, w)| d * w)
            .sum::<f64>()
            / norm;
        if self.history.len() == 2 {
            self.history.remove(0);
        }
        self.history.push(delta_raw);
        out
    }
}

/// First-order low-pass: `g_f(t) = alpha g_f(t-1) + (1 - alpha) g(t)`. The
/// first input initializes the state.
#[derive(Debug, Clone, PartialEq)]
pub struct GradFilter {
    alpha: f64,
    state: Option<Vec2>,
}

impl Default for GradFilter {
    fn default() -> Self {
        Self::new(0.97).expect("default alpha is valid")
    }
}

impl GradFilter {
    pub fn new(alpha: f64) -> Result<Self, String> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(format!("gradient filter alpha {alpha} must lie in [0, 1)"));
        }
        Ok(Self { alpha, state: None })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn state(&self) -> Option<Vec2> {
        self.state
    }

    pub fn apply(&mut self, g_new: Vec2) -> Vec2 {
        let out = match self.state {
            Some(prev) => prev * self.alpha + g_new * (1.0 - self.alpha),
            None => g_new,
        };
        self.state = Some(out);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlCommand {
    /// Velocity command of magnitude `speed`, m/s.
    pub u: Vec2,
    pub u_seek: Vec2,
    pub u_follow: Vec2,
}

impl ControlCommand {
    pub fn heading(&self) -> f64 {
        self.u.y.atan2(self.u.x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ControlError {
    #[error("gradient is zero or not finite; no direction can be derived")]
    DegenerateGradient,
}

pub fn compute_command(
    params: &ControlParams,
    delta_filtered: f64,
    grad_filtered: Vec2,
) -> Result<ControlCommand, ControlError> {
    if !(grad_filtered.x.is_finite() && grad_filtered.y.is_finite())
        || grad_filtered == Vec2::zeros()
    {
        return Err(ControlError::DegenerateGradient);
    }
    let u_seek = -params.alpha_seek * (delta_filtered - params.delta_ref) * grad_filtered;
    let u_follow = params.alpha_follow * params.rotation_sense.rotate(grad_filtered);
    let sum = u_seek + u_follow;
    let norm = sum.norm();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(ControlError::DegenerateGradient);
    }
    Ok(ControlCommand {
        u: sum * (params.speed / norm),
        u_seek,
        u_follow,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measurement_filter_weights_and_warmup() {
        let mut f = MeasFilter::default();
        assert_eq!(f.apply(5.0), 5.0);
        let mut f = MeasFilter::default();
        f.apply(1.0);
        assert!((f.apply(2.0) - (0.375 * 1.0 + 0.625 * 2.0)).abs() < 1e-15);
        assert!((f.apply(3.0) - 2.3).abs() < 1e-12);
    }

    #[test]
    fn measurement_filter_dc_gain() {
        let mut f = MeasFilter::default();
        for _ in 0..10 {
            assert!((f.apply(4.2) - 4.2).abs() < 1e-12);
        }
    }

    #[test]
    fn measurement_filter_rejects_bad_weights() {
        assert!(MeasFilter::new([0.5, 0.5, 0.5]).is_err());
        assert!(MeasFilter::new([-0.2, 0.7, 0.5]).is_err());
    }

    #[test]
    fn gradient_filter_step() {
        let mut f = GradFilter::default();
        assert_eq!(f.apply(Vec2::new(1.0, 0.0)), Vec2::new(1.0, 0.0));
        let out = f.apply(Vec2::new(0.0, 1.0));
        assert!((out - Vec2::new(0.97, 0.03)).norm() < 1e-15);
    }

    #[test]
    fn gradient_filter_geometric_convergence() {
        let mut f = GradFilter::default();
        f.apply(Vec2::zeros());
        let target = Vec2::new(2.0, -1.0);
        for k in 1..=50 {
            let out = f.apply(target);
            let expected = target * (1.0 - 0.97f64.powi(k));
            assert!((out - expected).norm() < 1e-12);
        }
        assert!(GradFilter::new(1.0).is_err());
    }

    #[test]
    fn on_front_command_is_perpendicular() {
        let p = ControlParams::default();
        let g = Vec2::new(0.3, -0.4);
        let c = compute_command(&p, p.delta_ref, g).unwrap();
        assert_eq!(c.u_seek, Vec2::zeros());
        assert!(c.u.dot(&g).abs() < 1e-15);
        assert!((c.u.norm() - p.speed).abs() < 1e-15);
    }

    #[test]
    fn worked_example() {
        let p = ControlParams::default();
        let c = compute_command(&p, p.delta_ref + 0.1, Vec2::new(1.0, 0.0)).unwrap();
        assert!((c.u_seek - Vec2::new(-1.0, 0.0)).norm() < 1e-12);
        assert_eq!(c.u_follow, Vec2::new(0.0, 1.0));
        let expected = Vec2::new(-1.0, 1.0).normalize();
        assert!((c.u - expected).norm() < 1e-12);
    }

    #[test]
    fn clockwise_sense_flips_follow() {
        let p = ControlParams {
            rotation_sense: RotationSense::Cw,
            ..Default::default()
        };
        let c = compute_command(&p, p.delta_ref, Vec2::new(1.0, 0.0)).unwrap();
        assert_eq!(c.u_follow, Vec2::new(0.0, -1.0));
    }

    #[test]
    fn zero_gradient_is_degenerate() {
        let p = ControlParams::default();
        assert_eq!(
            compute_command(&p, 1.0, Vec2::zeros()),
            Err(ControlError::DegenerateGradient)
        );
    }
}
