use serde::{Deserialize, Serialize};

use super::{MissionError, MissionLog, MissionRecord, Mode};
use crate::field::ScalarField;
use crate::geometry::angle_between;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsOptions {
    pub delta_ref: f64,
    /// Seconds after the first tracking tick that are ignored.
    pub settle_time: f64,
}

impl Default for MetricsOptions {
    fn default() -> Self {
        Self {
            delta_ref: 7.45,
            settle_time: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub rms: f64,
    pub max: f64,
    /// Nearest-rank 95th percentile.
    pub p95: f64,
    pub count: usize,
}

impl Stats {
    pub fn of(xs: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let rms = (xs.iter().map(|x| x * x).sum::<f64>() / n).sqrt();
        let mut sorted = xs.to_vec();
        sorted.sort_by(f64::total_cmp);
        let rank = (0.95 * n).ceil() as usize;
        Some(Self {
            mean,
            rms,
            max: sorted[sorted.len() - 1],
            p95: sorted[rank.clamp(1, sorted.len()) - 1],
            count: xs.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub tracking_ticks: usize,
    pub tracking_start: f64,
    /// |measured delta - delta_ref|, mg/m³.
    pub tracking_error: Stats,
    /// |delta at the true position - delta_ref|, mg/m³.
    pub true_tracking_error: Stats,
    /// Angle between the true and the filtered estimated gradient, rad.
    /// Absent when no tick had both.
    pub angle_error: Option<Stats>,
}

/// Metrics over tracking ticks, recomputing the true gradient from `field`.
pub fn metrics(
    log: &MissionLog,
    field: &dyn ScalarField,
    opts: &MetricsOptions,
) -> Result<MetricsReport, MissionError> {
    let records: Vec<MissionRecord> = log
        .records
        .iter()
        .map(|r| {
            let mut r = r.clone();
            let g = field.true_gradient(r.position()).ok();
            r.grad_true_x = g.map(|g| g.x);
            r.grad_true_y = g.map(|g| g.y);
            r
        })
        .collect();
    metrics_from_records(&records, opts)
}

/// Metrics from logged values alone, so a replayed log reproduces them.
pub fn metrics_from_records(
    records: &[MissionRecord],
    opts: &MetricsOptions,
) -> Result<MetricsReport, MissionError> {
    let start = records
        .iter()
        .find(|r| r.mode == Mode::Tracking)
        .map(|r| r.t)
        .ok_or_else(|| MissionError::Metrics("log has no tracking-mode ticks".into()))?;
    let settled: Vec<&MissionRecord> = records
        .iter()
        .filter(|r| r.mode == Mode::Tracking && r.t >= start + opts.settle_time)
        .collect();
    if settled.is_empty() {
        return Err(MissionError::Metrics(format!(
            "no tracking ticks after settle time {}",
            opts.settle_time
        )));
    }
    let err: Vec<f64> = settled
        .iter()
        .map(|r| (r.delta_raw - opts.delta_ref).abs())
        .collect();
    let true_err: Vec<f64> = settled
        .iter()
        .map(|r| (r.delta_true - opts.delta_ref).abs())
        .collect();
    let angles: Vec<f64> = settled
        .iter()
        .filter_map(|r| Some(angle_between(r.grad_true()?, r.grad_filtered()?)))
        .filter(|a| a.is_finite())
        .collect();
    Ok(MetricsReport {
        tracking_ticks: settled.len(),
        tracking_start: start,
        tracking_error: Stats::of(&err).expect("non-empty"),
        true_tracking_error: Stats::of(&true_err).expect("non-empty"),
        angle_error: Stats::of(&angles),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mission::MissionOutcome;

    fn rec(t: f64, mode: Mode, delta: f64, gt: [f64; 2], ge: [f64; 2]) -> MissionRecord {
        MissionRecord {
            t,
            x: 0.0,
            y: 0.0,
            x_reported: 0.0,
            y_reported: 0.0,
            heading: 0.0,
            delta_true: delta,
            delta_raw: delta,
            delta_filtered: delta,
            grad_est_x: None,
            grad_est_y: None,
            grad_filtered_x: Some(ge[0]),
            grad_filtered_y: Some(ge[1]),
            grad_true_x: Some(gt[0]),
            grad_true_y: Some(gt[1]),
            u_seek_x: 0.0,
            u_seek_y: 0.0,
            u_follow_x: 0.0,
            u_follow_y: 0.0,
            heading_cmd: 0.0,
            mode,
            status: "ok".into(),
            error: None,
        }
    }

    #[test]
    fn hand_built_three_tick_log() {
        let records = vec![
            rec(0.0, Mode::Transit, 100.0, [1.0, 0.0], [-1.0, 0.0]),
            rec(1.0, Mode::Tracking, 7.55, [1.0, 0.0], [1.0, 0.0]),
            rec(2.0, Mode::Tracking, 7.25, [1.0, 0.0], [0.0, 3.0]),
            rec(3.0, Mode::Tracking, 7.45, [1.0, 0.0], [-2.0, 0.0]),
        ];
        let opts = MetricsOptions::default();
        let m = metrics_from_records(&records, &opts).unwrap();
        assert_eq!(m.tracking_ticks, 3);
        assert_eq!(m.tracking_start, 1.0);
        let e = m.tracking_error;
        assert!((e.mean - 0.1).abs() < 1e-12);
        assert!((e.rms - (0.05f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((e.max - 0.2).abs() < 1e-12);
        assert!((e.p95 - 0.2).abs() < 1e-12);
        let a = m.angle_error.unwrap();
        let pi = std::f64::consts::PI;
        assert!((a.mean - 0.5 * pi).abs() < 1e-12);
        assert_eq!(a.max, pi);
        assert!((a.rms - ((pi * pi / 4.0 + pi * pi) / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn settle_time_drops_early_ticks() {
        let records = vec![
            rec(0.0, Mode::Tracking, 9.0, [1.0, 0.0], [1.0, 0.0]),
            rec(1.0, Mode::Tracking, 7.5, [1.0, 0.0], [1.0, 0.0]),
        ];
        let opts = MetricsOptions {
            settle_time: 1.0,
            ..Default::default()
        };
        let m = metrics_from_records(&records, &opts).unwrap();
        assert_eq!(m.tracking_ticks, 1);
        assert!((m.tracking_error.max - 0.05).abs() < 1e-12);
    }

    #[test]
    fn no_tracking_ticks_is_an_error() {
        let records = vec![rec(0.0, Mode::Transit, 7.0, [1.0, 0.0], [1.0, 0.0])];
        assert!(metrics_from_records(&records, &MetricsOptions::default()).is_err());
        let log = MissionLog {
            records: vec![],
            outcome: MissionOutcome::Completed,
            noise_checksum: String::new(),
        };
        let f = crate::field::SyntheticField::LinearRamp {
            slope: [1.0, 0.0],
            intercept: 0.0,
            domain: crate::geometry::Domain::new([0.0, 0.0], [1.0, 1.0]),
        };
        assert!(metrics(&log, &f, &MetricsOptions::default()).is_err());
    }

    #[test]
    fn percentile_is_nearest_rank() {
        let xs: Vec<f64> = (1..=20).map(f64::from).collect();
        assert_eq!(Stats::of(&xs).unwrap().p95, 19.0);
        assert_eq!(Stats::of(&[3.0]).unwrap().p95, 3.0);
        assert!(Stats::of(&[]).is_none());
    }
}
