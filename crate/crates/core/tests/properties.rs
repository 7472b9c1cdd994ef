use std::f64::consts::PI;
use std::sync::Arc;

use bloomtrack::control::{compute_command, ControlParams, GradFilter, MeasFilter};
use bloomtrack::estimators::{GpEstimator, GradientEstimator, LsqEstimator, MeasurementWindow};
use bloomtrack::field::{scale_field, FieldScale, GridField, ScalarField, SyntheticField};
use bloomtrack::geometry::{angle_between, Domain};
use bloomtrack::gp::{covariance_matrix, kernel, KernelParams, NoiseModel};
use bloomtrack::mission::{
    metrics_from_records, read_records_csv, run, FieldSource, MetricsOptions, MissionConfig, Mode,
};
use bloomtrack::vehicle::{step_toward, VehicleParams, VehicleState};
use bloomtrack::Vec2;
use proptest::prelude::*;

fn point(lo: f64, hi: f64) -> impl Strategy<Value = Vec2> {
    (lo..hi, lo..hi).prop_map(|(x, y)| Vec2::new(x, y))
}

fn nonzero_vec() -> impl Strategy<Value = Vec2> {
    (0.1..10.0f64, -PI..PI).prop_map(|(r, a)| Vec2::new(r * a.cos(), r * a.sin()))
}

fn kernel_params() -> impl Strategy<Value = KernelParams> {
    (0.1..20.0f64, 0.2..5.0f64, 0.2..5.0f64)
        .prop_map(|(s, l0, l1)| KernelParams::new(s, l0, l1).unwrap())
}

proptest! {
    #[test]
    fn kernel_is_symmetric(params in kernel_params(), a in point(-10.0, 10.0), b in point(-10.0, 10.0)) {
        prop_assert_eq!(kernel(&params, a, b), kernel(&params, b, a));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn covariance_is_psd(params in kernel_params(), pts in prop::collection::vec(point(-5.0, 5.0), 1..64)) {
        let mut k = covariance_matrix(&params, &pts);
        for i in 0..pts.len() {
            k[(i, i)] += 1e-10 * params.sigma2_k;
        }
        let min = k.symmetric_eigenvalues().min();
        prop_assert!(min >= -1e-12 * params.sigma2_k * pts.len() as f64, "min eigenvalue {}", min);
    }

    #[test]
    fn estimators_are_translation_equivariant(
        params in kernel_params(),
        pts in prop::collection::vec(point(0.0, 10.0), 6..30),
        vals in prop::collection::vec(-5.0..5.0f64, 30),
        p_star in point(0.0, 10.0),
        shift in point(-100.0, 100.0),
    ) {
        let fill = |offset: Vec2| {
            let mut w = MeasurementWindow::new(64);
            for (k, (p, v)) in pts.iter().zip(&vals).enumerate() {
                w.push(k as f64, p + offset, *v).unwrap();
            }
            w
        };
        let (w0, w1) = (fill(Vec2::zeros()), fill(shift));
        let gp = GpEstimator::new(params, NoiseModel::new(0.1).unwrap());
        let estimators: [&dyn GradientEstimator; 2] = [&gp, &LsqEstimator::default()];
        for est in estimators {
            match (est.estimate(&w0, p_star), est.estimate(&w1, p_star + shift)) {
                (Ok(a), Ok(b)) => {
                    let tol = 1e-10 * (1.0 + a.g.norm());
                    prop_assert!((a.g - b.g).norm() <= tol, "{}: {:?} vs {:?}", est.name(), a.g, b.g);
                }
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "{}: {:?} vs {:?}", est.name(), a, b),
            }
        }
    }
}

fn grid_values() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (2..8usize, 2..8usize).prop_flat_map(|(ny, nx)| {
        (
            Just(ny),
            Just(nx),
            prop::collection::vec(-50.0..50.0f64, ny * nx),
        )
    })
}

proptest! {
    #[test]
    fn bilinear_hits_nodes_and_stays_in_stencil(
        (ny, nx, values) in grid_values(),
        dx in 0.1..3.0f64,
        dy in 0.1..3.0f64,
        tx in 0.0..1.0f64,
        ty in 0.0..1.0f64,
    ) {
        let g = GridField::new([-1.0, 2.0], [dx, dy], ny, nx, values.clone()).unwrap();
        for i in 0..ny {
            for j in 0..nx {
                prop_assert_eq!(g.value_at(g.node(i, j)).unwrap(), values[i * nx + j]);
            }
        }
        let (i, j) = (((ny - 1) as f64 * ty) as usize % (ny - 1), ((nx - 1) as f64 * tx) as usize % (nx - 1));
        let p = g.node(i, j) + Vec2::new(tx * dx, ty * dy);
        let corners = [values[i * nx + j], values[i * nx + j + 1], values[(i + 1) * nx + j], values[(i + 1) * nx + j + 1]];
        let lo = corners.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = corners.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let v = g.value_at(p).unwrap();
        prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
    }

    #[test]
    fn ramp_gradient_is_its_slope(sx in -5.0..5.0f64, sy in -5.0..5.0f64, c in -5.0..5.0f64, p in point(-10.0, 10.0)) {
        let f = SyntheticField::LinearRamp {
            slope: [sx, sy],
            intercept: c,
            domain: Domain::new([-10.0, -10.0], [10.0, 10.0]),
        };
        prop_assert_eq!(f.true_gradient(p).unwrap(), Vec2::new(sx, sy));
    }

    #[test]
    fn scaling_rescales_queries(factor in 0.01..100.0f64, u in point(0.0, 1.0)) {
        let blob: Arc<dyn ScalarField> = Arc::new(SyntheticField::RadialBlob {
            center: [0.3, -0.2],
            amplitude: 14.9,
            width: 0.4,
            offset: 1.0,
            domain: Domain::new([-1.0, -1.0], [1.0, 1.0]),
        });
        let scaled = scale_field(blob.clone(), FieldScale::new(factor).unwrap());
        let p = Vec2::new(-1.0 + 2.0 * u.x, -1.0 + 2.0 * u.y) / factor;
        let a = scaled.value_at(p).unwrap();
        let b = blob.value_at(p * factor).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
    }

    #[test]
    fn command_laws(g in nonzero_vec(), delta in 0.0..15.0f64, c in 0.01..100.0f64, speed in 0.05..3.0f64) {
        let params = ControlParams { speed, ..Default::default() };
        let cmd = compute_command(&params, delta, g).unwrap();
        prop_assert!((cmd.u.norm() - speed).abs() <= 1e-12 * speed);
        prop_assert!(cmd.u_follow.dot(&g).abs() <= 1e-12 * cmd.u_follow.norm() * g.norm());
        let seek = cmd.u_seek.dot(&g);
        if delta > params.delta_ref {
            prop_assert!(seek < 0.0);
        } else if delta < params.delta_ref {
            prop_assert!(seek > 0.0);
        }
        let on = compute_command(&params, params.delta_ref, g).unwrap();
        let on_scaled = compute_command(&params, params.delta_ref, g * c).unwrap();
        prop_assert!((on.u - on_scaled.u).norm() <= 1e-12 * speed);
    }

    #[test]
    fn filters_are_linear(
        xs in prop::collection::vec(-10.0..10.0f64, 1..20),
        ys in prop::collection::vec(-10.0..10.0f64, 20),
        a in -3.0..3.0f64,
        b in -3.0..3.0f64,
        alpha in 0.0..0.999f64,
    ) {
        let (mut fx, mut fy, mut fz) = (MeasFilter::default(), MeasFilter::default(), MeasFilter::default());
        let (mut gx, mut gy, mut gz) = (GradFilter::new(alpha).unwrap(), GradFilter::new(alpha).unwrap(), GradFilter::new(alpha).unwrap());
        for (x, y) in xs.iter().zip(&ys) {
            let combined = fz.apply(a * x + b * y);
            let separate = a * fx.apply(*x) + b * fy.apply(*y);
            prop_assert!((combined - separate).abs() <= 1e-9);
            let (vx, vy) = (Vec2::new(*x, *y), Vec2::new(*y, -*x));
            let combined = gz.apply(vx * a + vy * b);
            let separate = gx.apply(vx) * a + gy.apply(vy) * b;
            prop_assert!((combined - separate).norm() <= 1e-9);
        }
    }

    #[test]
    fn vehicle_step_geometry(
        heading in -10.0..10.0f64,
        desired in -10.0..10.0f64,
        speed in 0.0..5.0f64,
        dt in 0.1..2.0f64,
        unit_scale in 0.5..1000.0f64,
    ) {
        let params = VehicleParams { dt, unit_scale, ..Default::default() };
        let s = VehicleState::new(Vec2::new(1.0, -2.0), heading, speed);
        prop_assert!(s.heading > -PI && s.heading <= PI);
        let n = step_toward(&s, desired, speed, &params);
        prop_assert!(n.heading > -PI && n.heading <= PI);
        let moved = (n.p - s.p).norm();
        prop_assert!((moved - speed * dt / unit_scale).abs() <= 1e-12 * (1.0 + moved));
        let free = VehicleParams { max_turn_rate: f64::INFINITY, ..params };
        let n = step_toward(&s, desired, speed, &free);
        prop_assert!((n.heading - bloomtrack::geometry::wrap_angle(desired)).abs() <= 1e-12);
    }

    #[test]
    fn angle_ignores_positive_scale(a in nonzero_vec(), b in nonzero_vec(), ca in 1e-3..1e3f64, cb in 1e-3..1e3f64) {
        let e = angle_between(a, b);
        prop_assert!((0.0..=PI).contains(&e));
        prop_assert!((angle_between(a * ca, b * cb) - e).abs() <= 1e-9);
    }
}

fn blob_mission(x0: f64, heading: f64, seed: u64) -> MissionConfig {
    let field = SyntheticField::RadialBlob {
        center: [0.0, 0.0],
        amplitude: 14.9,
        width: 877.0,
        offset: 0.0,
        domain: Domain::new([-2000.0, -2000.0], [2000.0, 2000.0]),
    };
    let mut cfg = MissionConfig::new(FieldSource::Synthetic(field), [x0, 0.0], heading, 400.0);
    cfg.kernel = Some(KernelParams::new(50.0, 800.0, 800.0).unwrap());
    cfg.sensor.sigma = 0.01;
    cfg.sensor.seed = seed;
    cfg
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn missions_never_leave_tracking_and_metrics_replay(
        x0 in 960.0..1100.0f64,
        heading in -PI..PI,
        seed in 0..1000u64,
    ) {
        let log = run(&blob_mission(x0, heading, seed)).unwrap();
        let first = log.records.iter().position(|r| r.mode == Mode::Tracking);
        if let Some(k) = first {
            prop_assert!(log.records[k..].iter().all(|r| r.mode == Mode::Tracking));
            prop_assert!(log.records[..k].iter().all(|r| r.mode == Mode::Transit));
        }
        let opts = MetricsOptions { settle_time: 50.0, ..Default::default() };
        let a = metrics_from_records(&log.records, &opts);
        let b = metrics_from_records(&log.records, &opts);
        prop_assert_eq!(format!("{a:?}"), format!("{b:?}"));
        let mut csv = Vec::new();
        log.write_csv(&mut csv).unwrap();
        let replayed = read_records_csv(csv.as_slice()).unwrap();
        prop_assert_eq!(&replayed, &log.records);
        let c = metrics_from_records(&replayed, &opts);
        prop_assert_eq!(format!("{a:?}"), format!("{c:?}"));
    }
}
