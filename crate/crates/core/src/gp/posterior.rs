use nalgebra::{Cholesky, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::kernel::{kernel, kernel_gradient};
use super::likelihood::factorize;
use super::{GpError, KernelParams, NoiseModel};
use crate::Vec2;

/// Variance floor below which a negative posterior variance is an error
/// rather than round-off.
const NEGATIVE_VARIANCE_TOL: f64 = 1e-9;

/// Prior variance used at the query point in the posterior variance.
///
/// `Process` is the usual `k(p*, p*) = sigma2_k`. `Noise` uses the
/// measurement noise variance `sigma^2` instead, a literal alternative
/// reading kept for comparison runs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KStarStar {
    #[default]
    Process,
    Noise,
}

/// A GP conditioned on `n >= 1` observations, with the factorization of
/// `K + sigma^2 I` and `alpha = (K + sigma^2 I)^-1 Delta` cached.
#[derive(Debug, Clone)]
pub struct GpPosterior {
    params: KernelParams,
    noise: NoiseModel,
    positions: Vec<Vec2>,
    values: Vec<f64>,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    jitter: f64,
    kstar_star: KStarStar,
}

impl GpPosterior {
    pub fn new(
        params: KernelParams,
        noise: NoiseModel,
        positions: Vec<Vec2>,
        values: Vec<f64>,
    ) -> Result<Self, GpError> {
        params.validate()?;
        if positions.is_empty() {
            return Err(GpError::EmptyConditioningSet);
        }
        if positions.len() != values.len() {
            return Err(GpError::InvalidData(format!(
                "{} positions but {} values",
                positions.len(),
                values.len()
            )));
        }
        let f = factorize(&params, &noise, &positions)?;
        let alpha = f.chol.solve(&DVector::from_column_slice(&values));
        Ok(Self {
            params,
            noise,
            positions,
            values,
            chol: f.chol,
            alpha,
            jitter: f.jitter,
            kstar_star: KStarStar::default(),
        })
    }

    pub fn with_kstar_star(mut self, kss: KStarStar) -> Self {
        self.kstar_star = kss;
        self
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn positions(&self) -> &[Vec2] {
        &self.positions
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    /// Diagonal jitter added beyond `sigma^2` to make the factorization succeed.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    fn k_star(&self, p_star: Vec2) -> DVector<f64> {
        DVector::from_iterator(
            self.positions.len(),
            self.positions
                .iter()
                .map(|&pj| kernel(&self.params, p_star, pj)),
        )
    }

    /// `K* alpha`
    pub fn predict_mean(&self, p_star: Vec2) -> f64 {
        self.positions
            .iter()
            .zip(self.alpha.iter())
            .map(|(&pj, a)| kernel(&self.params, p_star, pj) * a)
            .sum()
    }

    /// `K** - K* (K + sigma^2 I)^-1 K*^T`, with round-off negatives clamped to 0.
    pub fn predict_variance(&self, p_star: Vec2) -> Result<f64, GpError> {
        let kss = match self.kstar_star {
            KStarStar::Process => self.params.sigma2_k,
            KStarStar::Noise => self.noise.variance(),
        };
        let mut v = self.k_star(p_star);
        self.chol.l_dirty().solve_lower_triangular_mut(&mut v);
        let var = kss - v.norm_squared();
        if var >= 0.0 {
            Ok(var)
        } else if var >= -NEGATIVE_VARIANCE_TOL {
            Ok(0.0)
        } else {
            Err(GpError::NegativeVariance(var))
        }
    }

    /// `(grad K*) alpha`. Fails if `p_star` coincides with a conditioning point.
    pub fn predict_mean_gradient(&self, p_star: Vec2) -> Result<Vec2, GpError> {
        let mut g = Vec2::zeros();
        for (&pj, a) in self.positions.iter().zip(self.alpha.iter()) {
            g += kernel_gradient(&self.params, p_star, pj)? * *a;
        }
        Ok(g)
    }
}
