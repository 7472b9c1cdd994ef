use sha2::{Digest, Sha256};

use super::{
    MissionConfig, MissionError, MissionLog, MissionOutcome, MissionRecord, Mode, ResolvedMission,
};
use crate::control::{compute_command, GradFilter, MeasFilter};
use crate::estimators::{EstimatorRegistry, MeasurementWindow};
use crate::vehicle::{step, step_toward, PositionReporter, Sensor, VehicleState};
use crate::Vec2;

/// Runs a mission with the built-in estimators.
pub fn run(config: &MissionConfig) -> Result<MissionLog, MissionError> {
    run_with_registry(config, &EstimatorRegistry::with_builtins())
}

pub fn run_with_registry(
    config: &MissionConfig,
    registry: &EstimatorRegistry,
) -> Result<MissionLog, MissionError> {
    run_resolved(&config.resolve()?, registry)
}

/// Runs an already resolved mission. Setup problems are errors; anything
/// that happens once the vehicle is moving ends up in the log outcome.
pub fn run_resolved(
    mission: &ResolvedMission,
    registry: &EstimatorRegistry,
) -> Result<MissionLog, MissionError> {
    let cfg = &mission.config;
    let field = mission.field.as_ref();
    let settings = cfg.estimator_settings(mission.kernel);
    let estimator = registry.build(&cfg.estimator, &settings)?;
    let ctrl = &cfg.control;
    let dt = cfg.vehicle.dt;

    let mut state = VehicleState::new(
        Vec2::new(cfg.start[0], cfg.start[1]),
        cfg.initial_heading,
        ctrl.speed,
    );
    let mut sensor = Sensor::new(cfg.sensor);
    let mut reporter = PositionReporter::new(cfg.position_noise);
    let mut meas_filter = MeasFilter::default();
    let mut grad_filter =
        GradFilter::new(cfg.gradient_filter_alpha).map_err(MissionError::Config)?;
    let mut window = MeasurementWindow::new(cfg.window);
    let mut hasher = Sha256::new();
    let mut records = Vec::new();

    let mut mode = Mode::Transit;
    let mut g0: Option<Vec2> = cfg.initial_gradient.map(|g| Vec2::new(g[0], g[1]));
    let mut first_delta: Option<f64> = None;
    let mut failures = 0usize;
    let mut outcome = MissionOutcome::Completed;

    let mut k: u64 = 0;
    loop {
        let t = k as f64 * dt;
        if t >= cfg.duration {
            break;
        }
        k += 1;

        let (delta_raw, z) = match sensor.sense(field, &state) {
            Ok(v) => v,
            Err(e) => {
                outcome = MissionOutcome::ExitedDomain {
                    t,
                    reason: e.to_string(),
                };
                break;
            }
        };
        let delta_true = delta_raw - cfg.sensor.sigma * z;
        let (p_rep, [zx, zy]) = reporter.report_with_draws(&state);
        for draw in [z, zx, zy] {
            hasher.update(draw.to_bits().to_le_bytes());
        }

        let delta_f = if cfg.measurement_filter {
            meas_filter.apply(delta_raw)
        } else {
            delta_raw
        };
        first_delta.get_or_insert(delta_raw);
        window.push(t, p_rep, delta_raw)?;

        if mode == Mode::Transit
            && (delta_f - ctrl.delta_ref).abs() < cfg.trigger_band
            && window.len() >= cfg.min_samples
        {
            mode = Mode::Tracking;
            if g0.is_none() {
                let toward = if first_delta.unwrap_or(delta_f) <= ctrl.delta_ref {
                    1.0
                } else {
                    -1.0
                };
                g0 = Some(Vec2::new(state.heading.cos(), state.heading.sin()) * toward);
            }
            if let Some(g) = g0 {
                grad_filter.apply(g);
            }
        }

        let grad_true = field.true_gradient(state.p).ok();
        let mut rec = MissionRecord {
            t,
            x: state.p.x,
            y: state.p.y,
            x_reported: p_rep.x,
            y_reported: p_rep.y,
            heading: state.heading,
            delta_true,
            delta_raw,
            delta_filtered: delta_f,
            grad_est_x: None,
            grad_est_y: None,
            grad_filtered_x: None,
            grad_filtered_y: None,
            grad_true_x: grad_true.map(|g| g.x),
            grad_true_y: grad_true.map(|g| g.y),
            u_seek_x: 0.0,
            u_seek_y: 0.0,
            u_follow_x: 0.0,
            u_follow_y: 0.0,
            heading_cmd: cfg.initial_heading,
            mode,
            status: "transit".into(),
            error: None,
        };

        let next = match mode {
            Mode::Transit => step_toward(&state, cfg.initial_heading, ctrl.speed, &cfg.vehicle),
            Mode::Tracking => {
                let g = match estimator.estimate(&window, p_rep) {
                    Ok(est) => {
                        failures = 0;
                        rec.grad_est_x = Some(est.g.x);
                        rec.grad_est_y = Some(est.g.y);
                        rec.status = "ok".into();
                        Some(grad_filter.apply(est.g))
                    }
                    Err(e) => {
                        failures += 1;
                        rec.status = "hold".into();
                        rec.error = Some(e.to_string());
                        if failures >= cfg.max_consecutive_failures {
                            outcome = MissionOutcome::Aborted {
                                t,
                                reason: format!("{failures} consecutive estimator failures: {e}"),
                            };
                        }
                        grad_filter.state()
                    }
                };
                rec.grad_filtered_x = g.map(|g| g.x);
                rec.grad_filtered_y = g.map(|g| g.y);
                match g.map(|g| compute_command(ctrl, delta_f, g)) {
                    Some(Ok(cmd)) => {
                        rec.u_seek_x = cmd.u_seek.x;
                        rec.u_seek_y = cmd.u_seek.y;
                        rec.u_follow_x = cmd.u_follow.x;
                        rec.u_follow_y = cmd.u_follow.y;
                        rec.heading_cmd = cmd.heading();
                        step(&state, &cmd, &cfg.vehicle)
                    }
                    _ => {
                        rec.status = "degenerate".into();
                        rec.heading_cmd = state.heading;
                        step_toward(&state, state.heading, ctrl.speed, &cfg.vehicle)
                    }
                }
            }
        };
        records.push(rec);
        if matches!(outcome, MissionOutcome::Aborted { .. }) {
            break;
        }
        state = next;
    }

    Ok(MissionLog {
        records,
        outcome,
        noise_checksum: hex::encode(hasher.finalize()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{EstimatorError, GradientEstimate, GradientEstimator};
    use crate::field::SyntheticField;
    use crate::geometry::Domain;
    use crate::gp::KernelParams;
    use crate::mission::FieldSource;

    fn blob_mission(duration: f64) -> MissionConfig {
        let field = SyntheticField::RadialBlob {
            center: [0.0, 0.0],
            amplitude: 14.9,
            width: 877.0,
            offset: 0.0,
            domain: Domain::new([-2000.0, -2000.0], [2000.0, 2000.0]),
        };
        let mut cfg =
            MissionConfig::new(FieldSource::Synthetic(field), [990.0, 0.0], 0.0, duration);
        cfg.kernel = Some(KernelParams::new(50.0, 800.0, 800.0).unwrap());
        cfg
    }

    #[test]
    fn switches_to_tracking_once() {
        let log = run(&blob_mission(600.0)).unwrap();
        assert_eq!(log.outcome, MissionOutcome::Completed);
        assert_eq!(log.records.len(), 600);
        let switches = log
            .records
            .windows(2)
            .filter(|w| w[0].mode != w[1].mode)
            .count();
        assert_eq!(switches, 1);
        assert_eq!(log.records[0].mode, Mode::Transit);
        let t0 = log.tracking_started_at().unwrap();
        assert!(log
            .records
            .iter()
            .all(|r| (r.mode == Mode::Tracking) == (r.t >= t0)));
    }

    #[test]
    fn equal_configs_give_identical_csv() {
        let mut cfg = blob_mission(300.0);
        cfg.position_noise.sigma_xy = 0.5;
        let bytes = |cfg: &MissionConfig| {
            let mut out = Vec::new();
            run(cfg).unwrap().write_csv(&mut out).unwrap();
            out
        };
        let a = bytes(&cfg);
        assert_eq!(a, bytes(&cfg));
        cfg.sensor.seed += 1;
        assert_ne!(a, bytes(&cfg));
    }

    #[test]
    fn setup_errors() {
        assert!(matches!(
            run(&blob_mission(0.0)),
            Err(MissionError::Config(_))
        ));
        let mut cfg = blob_mission(10.0);
        cfg.start = [5000.0, 0.0];
        assert!(run(&cfg).is_err());
        let mut cfg = blob_mission(10.0);
        cfg.kernel = None;
        assert!(run(&cfg).is_err());
        let mut cfg = blob_mission(10.0);
        cfg.estimator = "kalman".into();
        assert!(matches!(run(&cfg), Err(MissionError::Estimator(_))));
    }

    #[test]
    fn leaving_the_domain_ends_the_mission() {
        let mut cfg = blob_mission(100.0);
        cfg.start = [1990.0, 0.0];
        cfg.control.speed = 1.0;
        let log = run(&cfg).unwrap();
        assert!(matches!(log.outcome, MissionOutcome::ExitedDomain { .. }));
        assert!(log.records.len() < 100);
        assert!(log.records.iter().all(|r| r.x <= 2000.0));
    }

    #[derive(Debug)]
    struct Broken;

    impl GradientEstimator for Broken {
        fn name(&self) -> &'static str {
            "broken"
        }

        fn estimate(
            &self,
            _window: &MeasurementWindow,
            _p_star: Vec2,
        ) -> Result<GradientEstimate, EstimatorError> {
            Err(EstimatorError::DegenerateGeometry)
        }
    }

    #[test]
    fn failing_estimator_holds_then_aborts() {
        let mut registry = EstimatorRegistry::with_builtins();
        registry.register("broken", |_| Ok(Box::new(Broken)));
        let mut cfg = blob_mission(600.0);
        cfg.estimator = "broken".into();
        cfg.max_consecutive_failures = 7;
        let log = run_with_registry(&cfg, &registry).unwrap();
        assert!(matches!(log.outcome, MissionOutcome::Aborted { .. }));
        let held: Vec<&MissionRecord> = log
            .records
            .iter()
            .filter(|r| r.mode == Mode::Tracking)
            .collect();
        assert_eq!(held.len(), 7);
        // The vehicle keeps steering on the initial gradient while it waits.
        let g0 = held[0].grad_filtered().unwrap();
        for r in &held {
            assert_eq!(r.status, "hold");
            assert_eq!(r.grad_filtered(), Some(g0));
        }
        assert_eq!(g0, Vec2::new(-1.0, 0.0));
    }

    #[test]
    fn initial_gradient_overrides_heading_guess() {
        let mut cfg = blob_mission(50.0);
        cfg.estimator = "lsq".into();
        cfg.initial_gradient = Some([0.0, 2.0]);
        cfg.max_consecutive_failures = 1;
        let log = run(&cfg).unwrap();
        let first = log
            .records
            .iter()
            .find(|r| r.mode == Mode::Tracking)
            .unwrap();
        assert_eq!(first.grad_filtered(), Some(Vec2::new(0.0, 2.0)));
    }
}
