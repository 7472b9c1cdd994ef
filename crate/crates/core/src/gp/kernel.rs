use nalgebra::DMatrix;

use super::{GpError, KernelParams, COINCIDENT_TOL};
use crate::Vec2;

#[inline]
fn scaled_distance(params: &KernelParams, d: Vec2) -> f64 {
    let [m0, m1] = params.metric();
    (m0 * d.x * d.x + m1 * d.y * d.y).sqrt()
}

/// Matérn-3/2 covariance between two positions.
#[inline]
pub fn kernel(params: &KernelParams, xi: Vec2, xj: Vec2) -> f64 {
    let r = scaled_distance(params, xi - xj);
    params.sigma2_k * (1.0 + r) * (-r).exp()
}

/// Gradient of `kernel(params, p_star, pj)` with respect to `p_star`:
/// `-s2 exp(-r) M (p_star - pj)`.
pub fn kernel_gradient(params: &KernelParams, p_star: Vec2, pj: Vec2) -> Result<Vec2, GpError> {
    let d = p_star - pj;
    if d.x.abs() <= COINCIDENT_TOL && d.y.abs() <= COINCIDENT_TOL {
        return Err(GpError::CoincidentPoint);
    }
    Ok(raw_gradient(params, d))
}

#[inline]
pub(crate) fn raw_gradient(params: &KernelParams, d: Vec2) -> Vec2 {
    let [m0, m1] = params.metric();
    let r = scaled_distance(params, d);
    let s = -params.sigma2_k * (-r).exp();
    Vec2::new(s * m0 * d.x, s * m1 * d.y)
}

/// Dense `K` with `K[i][j] = kernel(x_i, x_j)`, filled symmetrically.
pub fn covariance_matrix(params: &KernelParams, xs: &[Vec2]) -> DMatrix<f64> {
    let n = xs.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = params.sigma2_k;
        for j in 0..i {
            let v = kernel(params, xs[i], xs[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_one_high_res() -> KernelParams {
        KernelParams::new(18.2106, 0.0559, 0.0245).unwrap()
    }

    #[test]
    fn zero_distance_gives_process_variance() {
        let p = table_one_high_res();
        let x = Vec2::new(0.3, -0.2);
        assert_eq!(kernel(&p, x, x), 18.2106);
    }

    #[test]
    fn unit_scaled_distance_on_axis_zero() {
        let p = table_one_high_res();
        let d = Vec2::new(0.0559 / 3f64.sqrt(), 0.0);
        let k = kernel(&p, Vec2::zeros(), d);
        let expected = 18.2106 * 2.0 * (-1.0f64).exp();
        assert!((k - expected).abs() < 1e-12);
        assert!((k - 13.399).abs() < 1e-3);
    }

    #[test]
    fn decays_monotonically() {
        let p = KernelParams::new(2.0, 1.0, 0.5).unwrap();
        let mut last = f64::INFINITY;
        for step in 0..60 {
            let k = kernel(
                &p,
                Vec2::zeros(),
                Vec2::new(0.25 * step as f64, 0.1 * step as f64),
            );
            assert!(k < last || step == 0);
            last = k;
        }
        assert!(last < 1e-10);
    }

    #[test]
    fn gradient_axis_alignment_and_antisymmetry() {
        let p = table_one_high_res();
        let g = kernel_gradient(&p, Vec2::new(0.01, 0.0), Vec2::zeros()).unwrap();
        assert_eq!(g.y, 0.0);
        assert!(g.x < 0.0);
        let a = Vec2::new(0.013, -0.004);
        let b = Vec2::new(-0.02, 0.007);
        let gab = kernel_gradient(&p, a, b).unwrap();
        let gba = kernel_gradient(&p, b, a).unwrap();
        assert_eq!(gab, -gba);
    }

    #[test]
    fn gradient_rejects_coincident_points() {
        let p = table_one_high_res();
        let x = Vec2::new(1.0, 1.0);
        assert_eq!(kernel_gradient(&p, x, x), Err(GpError::CoincidentPoint));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = KernelParams::new(3.0, 0.7, 0.3).unwrap();
        let pj = Vec2::new(0.1, 0.2);
        for p_star in [
            Vec2::new(0.5, 0.1),
            Vec2::new(-0.3, 0.6),
            Vec2::new(0.12, 0.19),
        ] {
            let g = kernel_gradient(&p, p_star, pj).unwrap();
            for axis in 0..2 {
                let h = 1e-6 * if axis == 0 { p.l0 } else { p.l1 };
                let mut e = Vec2::zeros();
                e[axis] = h;
                let fd = (kernel(&p, p_star + e, pj) - kernel(&p, p_star - e, pj)) / (2.0 * h);
                let rel = (g[axis] - fd).abs() / g[axis].abs().max(1e-300);
                assert!(rel < 1e-5, "axis {axis}: {} vs {fd}", g[axis]);
            }
        }
    }
}
