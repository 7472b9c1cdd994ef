//! Planar vector helpers shared by every module.

use serde::{Deserialize, Serialize};

/// Position, gradient or velocity in the plane.
pub type Vec2 = nalgebra::Vector2<f64>;

/// Axis-aligned bounding box of a field, inclusive on every edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Domain {
    pub fn new(min: [f64; 2], max: [f64; 2]) -> Self {
        Self { min, max }
    }

    pub fn is_valid(&self) -> bool {
        self.min
            .iter()
            .chain(self.max.iter())
            .all(|v| v.is_finite())
            && self.min[0] < self.max[0]
            && self.min[1] < self.max[1]
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min[0] && p.x <= self.max[0] && p.y >= self.min[1] && p.y <= self.max[1]
    }

    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }

    /// The box seen through the map `p -> p / factor`.
    pub fn shrink(&self, factor: f64) -> Self {
        Self {
            min: [self.min[0] / factor, self.min[1] / factor],
            max: [self.max[0] / factor, self.max[1] / factor],
        }
    }
}

pub fn vec2(p: [f64; 2]) -> Vec2 {
    Vec2::new(p[0], p[1])
}

pub fn arr(v: Vec2) -> [f64; 2] {
    [v.x, v.y]
}

/// Wraps an angle to (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut w = a.rem_euclid(TAU);
    if w > PI {
        w -= TAU;
    }
    w
}

/// Unsigned angle between two vectors in [0, pi]. Zero vectors give NaN.
pub fn angle_between(a: Vec2, b: Vec2) -> f64 {
    let na = a.norm();
    let nb = b.norm();
    if na == 0.0 || nb == 0.0 {
        return f64::NAN;
    }
    // atan2 of cross and dot stays accurate near 0 and pi, unlike acos.
    let cross = a.x * b.y - a.y * b.x;
    let dot = a.dot(&b);
    cross.abs().atan2(dot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert_eq!(wrap_angle(0.25), 0.25);
    }

    #[test]
    fn angle_between_extremes() {
        let a = Vec2::new(1.0, 0.0);
        assert_eq!(angle_between(a, a * 3.0), 0.0);
        assert!((angle_between(a, -a) - PI).abs() < 1e-15);
        assert!((angle_between(a, Vec2::new(0.0, 2.0)) - PI / 2.0).abs() < 1e-15);
        assert!(angle_between(a, Vec2::zeros()).is_nan());
    }
}
