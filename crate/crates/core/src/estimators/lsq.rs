use super::{
    finite_estimate, EstimatorError, GradientEstimate, GradientEstimator, MeasurementWindow,
};
use crate::Vec2;

/// Relative eigenvalue floor of the position scatter below which the sample
/// geometry is treated as collinear.
const DEGENERACY_RATIO: f64 = 1e-12;

/// Ordinary least-squares plane `delta = a + b . (p - centroid)`; the
/// estimate is the slope `b`, independent of `p_star`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LsqEstimator {
    pub min_samples: usize,
}

impl Default for LsqEstimator {
    fn default() -> Self {
        Self { min_samples: 3 }
    }
}

impl GradientEstimator for LsqEstimator {
    fn name(&self) -> &'static str {
        "lsq"
    }

    fn estimate(
        &self,
        window: &MeasurementWindow,
        p_star: Vec2,
    ) -> Result<GradientEstimate, EstimatorError> {
        let need = self.min_samples.max(3);
        let n = window.len();
        if n < need {
            return Err(EstimatorError::InsufficientData { have: n, need });
        }
        let inv_n = 1.0 / n as f64;
        let centroid = window.iter().fold(Vec2::zeros(), |acc, s| acc + s.p) * inv_n;
        let mean = window.iter().map(|s| s.delta).sum::<f64>() * inv_n;

        let (mut sxx, mut sxy, mut syy, mut cx, mut cy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for s in window.iter() {
            let d = s.p - centroid;
            let v = s.delta - mean;
            sxx += d.x * d.x;
            sxy += d.x * d.y;
            syy += d.y * d.y;
            cx += d.x * v;
            cy += d.y * v;
        }
        let det = sxx * syy - sxy * sxy;
        let half_trace = 0.5 * (sxx + syy);
        let lambda_max = half_trace + (half_trace * half_trace - det).max(0.0).sqrt();
        if lambda_max <= 0.0 || det <= DEGENERACY_RATIO * lambda_max * lambda_max {
            return Err(EstimatorError::DegenerateGeometry);
        }
        let g = Vec2::new(syy * cx - sxy * cy, sxx * cy - sxy * cx) / det;
        finite_estimate(g, p_star, window, self.name())
    }
}

pub fn estimate_lsq(
    window: &MeasurementWindow,
    p_star: Vec2,
) -> Result<GradientEstimate, EstimatorError> {
    LsqEstimator::default().estimate(window, p_star)
}
