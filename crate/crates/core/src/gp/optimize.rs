//! Multi-start quasi-Newton ascent of the pooled log marginal likelihood.
//!
//! The search runs over `theta = ln(sigma2_k, l0, l1)` inside a box, with
//! central finite-difference gradients and a BFGS inverse-Hessian update.
//! Every evaluation of the pooled objective counts against the budget.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::likelihood::pooled_log_likelihood;
use super::{GpError, KernelParams, NoiseModel, TrainingSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitOptions {
    /// Maximum number of pooled-likelihood evaluations across all starts.
    pub budget: usize,
    pub starts: usize,
    pub seed: u64,
    /// Half-width, in log units, of the box the extra starts are drawn from.
    pub start_spread: f64,
    /// Finite-difference step in log units.
    pub fd_step: f64,
    pub grad_tol: f64,
    /// `[lo, hi]` per log-parameter; derived from the data when absent.
    pub log_bounds: Option<[[f64; 2]; 3]>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            budget: 1500,
            starts: 5,
            seed: 0,
            start_spread: 1.5,
            fd_step: 1e-4,
            grad_tol: 1e-5,
            log_bounds: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartSummary {
    pub start: KernelParams,
    pub best: Option<KernelParams>,
    pub lml: f64,
    pub evaluations: usize,
    pub iterations: usize,
    /// Best objective after each accepted step, beginning with the start point.
    pub trajectory: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub params: KernelParams,
    pub lml: f64,
    /// `None` when the initialization itself was ill conditioned.
    pub init_lml: Option<f64>,
    pub evaluations: usize,
    pub starts: Vec<StartSummary>,
}

struct Objective<'a> {
    noise: &'a NoiseModel,
    days: &'a [TrainingSet],
    evals: usize,
    budget: usize,
}

impl Objective<'_> {
    fn remaining(&self) -> usize {
        self.budget.saturating_sub(self.evals)
    }

    /// Pooled LML, or -inf when the evaluation is ill conditioned.
    fn lml(&mut self, theta: &[f64; 3]) -> f64 {
        self.evals += 1;
        pooled_log_likelihood(&KernelParams::from_log(*theta), self.noise, self.days)
            .unwrap_or(f64::NEG_INFINITY)
    }

    fn gradient(&mut self, theta: &[f64; 3], h: f64) -> Option<[f64; 3]> {
        let mut g = [0.0; 3];
        for k in 0..3 {
            let mut up = *theta;
            let mut dn = *theta;
            up[k] += h;
            dn[k] -= h;
            let fu = self.lml(&up);
            let fd = self.lml(&dn);
            if !(fu.is_finite() && fd.is_finite()) {
                return None;
            }
            g[k] = (fu - fd) / (2.0 * h);
        }
        Some(g)
    }
}

fn clamp(theta: [f64; 3], bounds: &[[f64; 2]; 3]) -> [f64; 3] {
    std::array::from_fn(|k| theta[k].clamp(bounds[k][0], bounds[k][1]))
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn default_bounds(days: &[TrainingSet], init: &KernelParams) -> [[f64; 2]; 3] {
    let (mut sum_sq, mut n) = (0.0, 0usize);
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for d in days {
        for (p, v) in d.positions().iter().zip(d.values()) {
            sum_sq += v * v;
            n += 1;
            lo = [lo[0].min(p.x), lo[1].min(p.y)];
            hi = [hi[0].max(p.x), hi[1].max(p.y)];
        }
    }
    let scale = if n > 0 && sum_sq > 0.0 {
        sum_sq / n as f64
    } else {
        init.sigma2_k
    };
    let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let extent = if extent.is_finite() && extent > 0.0 {
        extent
    } else {
        init.l0.max(init.l1)
    };
    let t = init.to_log();
    let widen = |lo: f64, hi: f64, v: f64| [lo.min(v - 1.0), hi.max(v + 1.0)];
    [
        widen((1e-6 * scale).ln(), (1e3 * scale).ln(), t[0]),
        widen((1e-4 * extent).ln(), (1e2 * extent).ln(), t[1]),
        widen((1e-4 * extent).ln(), (1e2 * extent).ln(), t[2]),
    ]
}

fn run_start(
    start: [f64; 3],
    budget: usize,
    noise: &NoiseModel,
    days: &[TrainingSet],
    bounds: &[[f64; 2]; 3],
    opts: &FitOptions,
) -> StartSummary {
    let mut obj = Objective {
        noise,
        days,
        evals: 0,
        budget,
    };
    let mut x = start;
    let mut f = obj.lml(&x);
    let mut trajectory = vec![f];
    let mut iterations = 0;
    let summary = |x: [f64; 3], f: f64, obj: &Objective, iterations, trajectory| StartSummary {
        start: KernelParams::from_log(start),
        best: f.is_finite().then(|| KernelParams::from_log(x)),
        lml: f,
        evaluations: obj.evals,
        iterations,
        trajectory,
    };
    if !f.is_finite() {
        return summary(x, f, &obj, iterations, trajectory);
    }

    // Minimizes -LML; `g` is the gradient of -LML.
    let mut h_inv = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let mut g = match (obj.remaining() >= 6)
        .then(|| obj.gradient(&x, opts.fd_step))
        .flatten()
    {
        Some(g) => g.map(|v| -v),
        None => return summary(x, f, &obj, iterations, trajectory),
    };
    loop {
        if g.iter().map(|v| v.abs()).fold(0.0, f64::max) < opts.grad_tol {
            break;
        }
        let mut d: [f64; 3] = std::array::from_fn(|i| -dot(&h_inv[i], &g));
        if dot(&d, &g) >= 0.0 {
            h_inv = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
            d = g.map(|v| -v);
        }
        // Cap the step at one log unit per component.
        let dmax = d.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if dmax > 1.0 {
            d = d.map(|v| v / dmax);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            if obj.remaining() == 0 {
                break;
            }
            let xn = clamp(std::array::from_fn(|k| x[k] + step * d[k]), bounds);
            let s: [f64; 3] = std::array::from_fn(|k| xn[k] - x[k]);
            if s.iter().all(|v| *v == 0.0) {
                break;
            }
            let fn_ = obj.lml(&xn);
            // Armijo condition on -LML.
            if fn_.is_finite() && -fn_ <= -f + 1e-4 * dot(&g, &s) {
                accepted = Some((xn, fn_, s));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_, s)) = accepted else { break };
        let improvement = fn_ - f;
        x = xn;
        f = fn_;
        iterations += 1;
        trajectory.push(f);
        if improvement.abs() <= 1e-12 * (1.0 + f.abs()) || obj.remaining() < 6 {
            break;
        }
        let Some(gn) = obj.gradient(&x, opts.fd_step) else {
            break;
        };
        let gn = gn.map(|v| -v);
        let y: [f64; 3] = std::array::from_fn(|k| gn[k] - g[k]);
        let sy = dot(&s, &y);
        if sy > 1e-12 {
            // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            let rho = 1.0 / sy;
            let hy: [f64; 3] = std::array::from_fn(|i| dot(&h_inv[i], &y));
            let yhy = dot(&y, &hy);
            let mut next = h_inv;
            for i in 0..3 {
                for j in 0..3 {
                    next[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j])
                        + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
            h_inv = next;
        }
        g = gn;
    }
    summary(x, f, &obj, iterations, trajectory)
}

/// Maximizes the sum of per-day log marginal likelihoods over the kernel
/// hyperparameters.
///
/// The first start is `init` itself, so the returned likelihood is never
/// below the initialization's. Starts run in parallel with independent
/// budget shares; the outcome does not depend on the thread count.
pub fn fit_hyperparameters(
    train_days: &[TrainingSet],
    noise: &NoiseModel,
    init: &KernelParams,
    opts: &FitOptions,
) -> Result<FitReport, GpError> {
    init.validate()?;
    if train_days.is_empty() {
        return Err(GpError::InvalidData("no training days".into()));
    }
    if opts.budget == 0 {
        return Err(GpError::InvalidData(
            "evaluation budget must be >= 1".into(),
        ));
    }
    let bounds = opts
        .log_bounds
        .unwrap_or_else(|| default_bounds(train_days, init));
    let n_starts = opts.starts.max(1).min(opts.budget);
    let share = opts.budget / n_starts;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let theta0 = init.to_log();
    let starts: Vec<([f64; 3], usize)> = (0..n_starts)
        .map(|k| {
            let budget = if k == 0 {
                opts.budget - share * (n_starts - 1)
            } else {
                share
            };
            if k == 0 {
                (theta0, budget)
            } else {
                let jitter: [f64; 3] = std::array::from_fn(|_| {
                    rng.random_range(-opts.start_spread..=opts.start_spread)
                });
                (
                    clamp(std::array::from_fn(|i| theta0[i] + jitter[i]), &bounds),
                    budget,
                )
            }
        })
        .collect();

    let summaries: Vec<StartSummary> = starts
        .par_iter()
        .map(|(theta, budget)| run_start(*theta, *budget, noise, train_days, &bounds, opts))
        .collect();

    let init_lml = summaries[0]
        .trajectory
        .first()
        .copied()
        .filter(|v| v.is_finite());
    let evaluations = summaries.iter().map(|s| s.evaluations).sum();
    let best = summaries.iter().filter(|s| s.best.is_some()).fold(
        None::<&StartSummary>,
        |acc, s| match acc {
            Some(a) if a.lml >= s.lml => Some(a),
            _ => Some(s),
        },
    );
    match best {
        Some(b) => Ok(FitReport {
            params: b.best.expect("filtered"),
            lml: b.lml,
            init_lml,
            evaluations,
            starts: summaries,
        }),
        None => Err(GpError::FitFailed { best: None }),
    }
}
