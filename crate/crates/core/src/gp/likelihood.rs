use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::kernel::covariance_matrix;
use super::{GpError, KernelParams, NoiseModel, TrainingSet};
use crate::Vec2;

/// First jitter tried after a failed factorization, relative to `sigma2_k`.
const JITTER_START: f64 = 1e-10;
/// Largest jitter before giving up, relative to `sigma2_k`.
const JITTER_MAX: f64 = 1e-4;

/// Cholesky factor of `K + sigma^2 I (+ jitter I)` and the jitter that was needed.
pub(crate) struct Factorized {
    pub chol: Cholesky<f64, Dyn>,
    pub jitter: f64,
}

/// Factorizes `K + sigma^2 I`, escalating a diagonal jitter from
/// `1e-10 sigma2_k` by factors of ten up to `1e-4 sigma2_k`.
pub(crate) fn factorize(
    params: &KernelParams,
    noise: &NoiseModel,
    xs: &[Vec2],
) -> Result<Factorized, GpError> {
    let mut k = covariance_matrix(params, xs);
    for i in 0..xs.len() {
        k[(i, i)] += noise.variance();
    }
    factorize_matrix(k, params.sigma2_k)
}

fn factorize_matrix(k: DMatrix<f64>, sigma2_k: f64) -> Result<Factorized, GpError> {
    if let Some(chol) = Cholesky::new(k.clone()) {
        return Ok(Factorized { chol, jitter: 0.0 });
    }
    let mut rel = JITTER_START;
    while rel <= JITTER_MAX * (1.0 + 1e-9) {
        let jitter = rel * sigma2_k;
        let mut kj = k.clone();
        for i in 0..kj.nrows() {
            kj[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(kj) {
            return Ok(Factorized { chol, jitter });
        }
        rel *= 10.0;
    }
    Err(GpError::IllConditioned {
        max_jitter: JITTER_MAX * sigma2_k,
    })
}

/// `-1/2 y^T A^-1 y - 1/2 log|A| - N/2 log 2 pi` with `A = K + sigma^2 I`,
/// evaluated through the Cholesky factor of `A`.
pub fn log_marginal_likelihood(
    params: &KernelParams,
    noise: &NoiseModel,
    xs: &[Vec2],
    ys: &[f64],
) -> Result<f64, GpError> {
    params.validate()?;
    if xs.len() != ys.len() || xs.is_empty() {
        return Err(GpError::InvalidData(format!(
            "need matching, non-empty positions and values ({} vs {})",
            xs.len(),
            ys.len()
        )));
    }
    let f = factorize(params, noise, xs)?;
    let y = DVector::from_column_slice(ys);
    let alpha = f.chol.solve(&y);
    let data_fit = -0.5 * y.dot(&alpha);
    let l = f.chol.l_dirty();
    let half_log_det: f64 = (0..ys.len()).map(|i| l[(i, i)].ln()).sum();
    Ok(data_fit - half_log_det - 0.5 * ys.len() as f64 * (2.0 * PI).ln())
}

/// Sum of independent per-day log marginal likelihoods.
pub fn pooled_log_likelihood(
    params: &KernelParams,
    noise: &NoiseModel,
    days: &[TrainingSet],
) -> Result<f64, GpError> {
    days.iter()
        .map(|d| log_marginal_likelihood(params, noise, d.positions(), d.values()))
        .sum()
}
