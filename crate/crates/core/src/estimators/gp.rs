use super::{
    finite_estimate, EstimatorError, EstimatorSettings, GradientEstimate, GradientEstimator,
    MeasurementWindow, DEFAULT_MIN_SAMPLES,
};
use crate::gp::{GpPosterior, KernelParams, NoiseModel, COINCIDENT_TOL};
use crate::Vec2;

/// Posterior-mean gradient of a GP conditioned on the window.
///
/// Samples at `p_star` itself are dropped before conditioning, since the
/// kernel gradient is undefined there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpEstimator {
    pub params: KernelParams,
    pub noise: NoiseModel,
    pub prior_mean: f64,
    pub min_samples: usize,
}

impl GpEstimator {
    pub fn new(params: KernelParams, noise: NoiseModel) -> Self {
        Self {
            params,
            noise,
            prior_mean: 0.0,
            min_samples: DEFAULT_MIN_SAMPLES,
        }
    }

    pub fn from_settings(s: &EstimatorSettings) -> Result<Self, EstimatorError> {
        let params = s.kernel.ok_or(EstimatorError::MissingKernel("gp"))?;
        params.validate()?;
        Ok(Self {
            params,
            noise: s.noise,
            prior_mean: s.prior_mean,
            min_samples: s.min_samples,
        })
    }
}

impl GradientEstimator for GpEstimator {
    fn name(&self) -> &'static str {
        "gp"
    }

    fn estimate(
        &self,
        window: &MeasurementWindow,
        p_star: Vec2,
    ) -> Result<GradientEstimate, EstimatorError> {
        let (positions, values): (Vec<Vec2>, Vec<f64>) = window
            .iter()
            .filter(|s| {
                let d = s.p - p_star;
                d.x.abs() > COINCIDENT_TOL || d.y.abs() > COINCIDENT_TOL
            })
            .map(|s| (s.p, s.delta - self.prior_mean))
            .unzip();
        let need = self.min_samples.max(1);
        if positions.len() < need {
            return Err(EstimatorError::InsufficientData {
                have: positions.len(),
                need,
            });
        }
        let post = GpPosterior::new(self.params, self.noise, positions, values)?;
        let g = post.predict_mean_gradient(p_star)?;
        finite_estimate(g, p_star, window, self.name())
    }
}

pub fn estimate_gp(
    window: &MeasurementWindow,
    params: &KernelParams,
    noise: &NoiseModel,
    p_star: Vec2,
) -> Result<GradientEstimate, EstimatorError> {
    GpEstimator::new(*params, *noise).estimate(window, p_star)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> KernelParams {
        KernelParams::new(4.0, 2.0, 2.0).unwrap()
    }

    fn spiral_window(f: impl Fn(Vec2) -> f64) -> MeasurementWindow {
        let mut w = MeasurementWindow::new(200);
        for k in 0..120 {
            let a = 0.35 * k as f64;
            let r = 0.02 * k as f64;
            let p = Vec2::new(r * a.cos(), r * a.sin());
            w.push(k as f64, p, f(p)).unwrap();
        }
        w
    }

    #[test]
    fn recovers_ramp_slope() {
        let w = spiral_window(|p| 0.8 * p.x - 0.3 * p.y + 7.0);
        let est = GpEstimator {
            prior_mean: 7.0,
            ..GpEstimator::new(params(), NoiseModel::new(1e-3).unwrap())
        };
        let g = est.estimate(&w, Vec2::new(0.1, -0.2)).unwrap().g;
        let truth = Vec2::new(0.8, -0.3);
        assert!((g - truth).norm() < 0.1 * truth.norm(), "{g}");
    }

    #[test]
    fn flat_window_gives_zero_gradient() {
        let w = spiral_window(|_| 2.5);
        let est = GpEstimator {
            prior_mean: 2.5,
            ..GpEstimator::new(params(), NoiseModel::new(1e-3).unwrap())
        };
        assert!(est.estimate(&w, Vec2::new(0.3, 0.3)).unwrap().g.norm() < 1e-8);
    }

    #[test]
    fn sample_at_query_is_excluded() {
        let w = spiral_window(|p| p.x);
        let last = w.iter().last().unwrap().p;
        let e = estimate_gp(&w, &params(), &NoiseModel::new(1e-3).unwrap(), last).unwrap();
        assert!(e.g.x > 0.0);
        assert_eq!(e.at, last);
        assert_eq!(e.method, "gp");
    }

    #[test]
    fn too_few_samples() {
        let mut w = MeasurementWindow::new(10);
        for k in 0..4 {
            w.push(k as f64, Vec2::new(k as f64, 0.0), 1.0).unwrap();
        }
        assert_eq!(
            estimate_gp(
                &w,
                &params(),
                &NoiseModel::new(0.1).unwrap(),
                Vec2::new(9.0, 9.0)
            )
            .unwrap_err(),
            EstimatorError::InsufficientData { have: 4, need: 5 }
        );
    }

    #[test]
    fn collinear_samples_stay_finite() {
        let mut w = MeasurementWindow::new(50);
        for k in 0..50 {
            let p = Vec2::new(0.1 * k as f64, 0.0);
            w.push(k as f64, p, 3.0 * p.x).unwrap();
        }
        let e = estimate_gp(
            &w,
            &params(),
            &NoiseModel::new(1e-3).unwrap(),
            Vec2::new(5.0, 0.0),
        )
        .unwrap();
        assert!(e.g.x.is_finite() && e.g.y.is_finite());
    }
}
