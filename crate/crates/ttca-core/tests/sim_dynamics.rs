use ttca_core::field::WaypointSet;
use ttca_core::sim::{metrics, step_dynamics, track_path, BicycleParams, ControllerConfig, RefPath, SimState};

fn hold_steer(steer: f64, v: f64, dt: f64, t_end: f64) -> SimState {
    let p = BicycleParams::default();
    let mut s = SimState::straight(0.0, 0.0, v);
    for _ in 0..(t_end / dt).round() as usize {
        s = step_dynamics(&s, steer, &p, dt).unwrap();
    }
    s
}

#[test]
fn steady_state_yaw_rate_gain() {
    let p = BicycleParams::default();
    for v in [10.0, 20.0, 30.0] {
        let steer = 0.01;
        let s = hold_steer(steer, v, 0.01, 10.0);
        let want = v / (p.wheelbase() + p.understeer_gradient() * v * v);
        assert!((s.yaw_rate / steer - want).abs() < 1e-6 * want, "v {v}: {} vs {want}", s.yaw_rate / steer);
    }
}

#[test]
fn rk4_error_shrinks_at_fourth_order() {
    let reference = hold_steer(0.02, 25.0, 0.000625, 2.0);
    let err = |dt| {
        let s = hold_steer(0.02, 25.0, dt, 2.0);
        (s.y - reference.y).abs() + (s.yaw - reference.yaw).abs()
    };
    let (e1, e2) = (err(0.04), err(0.02));
    let order = (e1 / e2).log2();
    assert!(order > 3.5 && order < 4.5, "observed order {order}");
}

fn sampled(f: impl Fn(f64) -> f64, x0: f64, x1: f64, ds: f64) -> RefPath {
    let n = ((x1 - x0) / ds).round() as usize;
    let pts: Vec<(f64, f64)> = (0..=n).map(|i| x0 + i as f64 * ds).map(|x| (x, f(x))).collect();
    RefPath::from_waypoints(&WaypointSet::with_unit_weights(pts)).unwrap()
}

#[test]
fn mirrored_path_mirrors_the_log() {
    let p = BicycleParams::default();
    let ctl = ControllerConfig::default();
    let wave = |x: f64| 0.5 * (x / 40.0).sin();
    let up = track_path(&sampled(wave, 0.0, 400.0, 0.5), SimState::straight(0.0, 0.0, 20.0), &p, &ctl, 0.01).unwrap();
    let down = track_path(&sampled(|x| -wave(x), 0.0, 400.0, 0.5), SimState::straight(0.0, 0.0, 20.0), &p, &ctl, 0.01).unwrap();
    assert_eq!(up.samples.len(), down.samples.len());
    for (a, b) in up.samples.iter().zip(&down.samples) {
        assert!((a.x - b.x).abs() < 1e-9);
        assert!((a.y + b.y).abs() < 1e-9 && (a.yaw + b.yaw).abs() < 1e-12 && (a.steer + b.steer).abs() < 1e-12);
    }
}

#[test]
fn sinusoid_zero_crossings_lag_the_reference_slightly() {
    let p = BicycleParams::default();
    let ctl = ControllerConfig::default();
    let period = 200.0;
    let wave = |x: f64| 0.4 * (2.0 * std::f64::consts::PI * x / period).sin();
    let log = track_path(&sampled(wave, 0.0, 1000.0, 0.5), SimState::straight(0.0, 0.0, 25.0), &p, &ctl, 0.01).unwrap();
    let crossings: Vec<f64> = log
        .samples
        .windows(2)
        .filter(|w| w[0].y.signum() != w[1].y.signum() && w[0].x > 50.0)
        .map(|w| w[0].x + (w[1].x - w[0].x) * w[0].y / (w[0].y - w[1].y))
        .collect();
    assert!(crossings.len() >= 7);
    for c in crossings {
        let k = (c / (0.5 * period)).round();
        let lag = c - k * 0.5 * period;
        assert!(lag.abs() < 5.0, "crossing at {c}");
    }
}

#[test]
fn circular_arc_needs_steady_state_steer() {
    let p = BicycleParams::default();
    let ctl = ControllerConfig::default();
    let r = 800.0;
    let v = 20.0;
    // arc y = R − √(R² − x²) over a short quarter, tracked near steady state
    let path = sampled(|x| r - (r * r - x * x).sqrt(), 0.0, 300.0, 0.25);
    let log = track_path(&path, SimState::straight(0.0, 0.0, v), &p, &ctl, 0.01).unwrap();
    let tail = &log.samples[log.samples.len() * 2 / 3..];
    let steer = tail.iter().map(|s| s.steer).sum::<f64>() / tail.len() as f64;
    let want = (p.wheelbase() + p.understeer_gradient() * v * v) / r;
    assert!((steer - want).abs() < 0.05 * want, "{steer} vs {want}");
    for s in tail {
        assert!((s.curvature - 1.0 / r).abs() < 1e-3 / r);
    }
}

#[test]
fn halving_dt_barely_moves_a_lane_change() {
    let p = BicycleParams::default();
    let ctl = ControllerConfig::default();
    let shift = |x: f64| 3.0 / (1.0 + (-(x - 150.0) / 15.0).exp());
    let path = sampled(shift, 0.0, 400.0, 0.5);
    let a = metrics(&track_path(&path, SimState::straight(0.0, 0.0, 25.0), &p, &ctl, 0.01).unwrap(), 3.0).unwrap();
    let b = metrics(&track_path(&path, SimState::straight(0.0, 0.0, 25.0), &p, &ctl, 0.005).unwrap(), 3.0).unwrap();
    for (x, y) in a.values().iter().zip(b.values()) {
        assert!((x - y).abs() <= 1e-3 * x.abs().max(1e-3), "{x} vs {y}");
    }
}
