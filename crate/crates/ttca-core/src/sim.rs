//! Constant-speed linear bicycle model (sideslip and yaw rate), a pure-pursuit
//! tracker and the lane-change metrics computed from its log.

use alloc::vec::Vec;
use core::f64::consts::PI;
use libm::{atan, atan2, cos, sin, sqrt};

use crate::error::{Error, Result};
use crate::field::WaypointSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BicycleParams {
    pub mass: f64,
    pub yaw_inertia: f64,
    pub dist_cg_front: f64,
    pub dist_cg_rear: f64,
    pub cornering_stiff_front: f64,
    pub cornering_stiff_rear: f64,
}

impl Default for BicycleParams {
    fn default() -> Self {
        BicycleParams {
            mass: 1500.0,
            yaw_inertia: 2500.0,
            dist_cg_front: 1.2,
            dist_cg_rear: 1.6,
            cornering_stiff_front: 80_000.0,
            cornering_stiff_rear: 80_000.0,
        }
    }
}

impl BicycleParams {
    pub fn wheelbase(&self) -> f64 {
        self.dist_cg_front + self.dist_cg_rear
    }

    pub fn validate(&self) -> Result<()> {
        let v = [
            self.mass,
            self.yaw_inertia,
            self.dist_cg_front,
            self.dist_cg_rear,
            self.cornering_stiff_front,
            self.cornering_stiff_rear,
        ];
        if v.iter().all(|a| a.is_finite() && *a > 0.0) {
            Ok(())
        } else {
            Err(Error::Invalid("bicycle parameters must be positive"))
        }
    }

    /// Understeer gradient (rad per m/s² of lateral acceleration).
    pub fn understeer_gradient(&self) -> f64 {
        self.mass / self.wheelbase()
            * (self.dist_cg_rear / self.cornering_stiff_front - self.dist_cg_front / self.cornering_stiff_rear)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimState {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub yaw_rate: f64,
    pub sideslip: f64,
    pub speed: f64,
}

impl SimState {
    pub fn straight(x: f64, y: f64, speed: f64) -> Self {
        SimState { x, y, yaw: 0.0, yaw_rate: 0.0, sideslip: 0.0, speed }
    }
}

pub const MAX_DT: f64 = 0.05;
pub const MAX_STEER: f64 = 30.0 * PI / 180.0;
const MAX_SIDESLIP: f64 = 30.0 * PI / 180.0;

fn sq(v: f64) -> f64 {
    v * v
}

/// d/dt of (x, y, yaw, yaw_rate, sideslip) at fixed speed and steer.
fn derivative(s: &[f64; 5], v: f64, steer: f64, p: &BicycleParams) -> [f64; 5] {
    let [_, _, psi, r, beta] = *s;
    let (m, iz, lf, lr) = (p.mass, p.yaw_inertia, p.dist_cg_front, p.dist_cg_rear);
    let (cf, cr) = (p.cornering_stiff_front, p.cornering_stiff_rear);
    let beta_dot = -(cf + cr) / (m * v) * beta + ((cr * lr - cf * lf) / (m * v * v) - 1.0) * r + cf / (m * v) * steer;
    let r_dot = (cr * lr - cf * lf) / iz * beta - (cf * lf * lf + cr * lr * lr) / (iz * v) * r + cf * lf / iz * steer;
    [v * cos(psi + beta), v * sin(psi + beta), r, r_dot, beta_dot]
}

/// One RK4 step with the steer held constant.
pub fn step_dynamics(s: &SimState, steer: f64, p: &BicycleParams, dt: f64) -> Result<SimState> {
    if !(dt > 0.0 && dt <= MAX_DT) {
        return Err(Error::Invalid("dt must lie in (0, 0.05] s"));
    }
    if !(steer.abs() <= MAX_STEER) {
        return Err(Error::Invalid("steer exceeds 30 degrees"));
    }
    if !(s.speed > 0.0) {
        return Err(Error::Invalid("the lateral model needs positive speed"));
    }
    let v = s.speed;
    let y0 = [s.x, s.y, s.yaw, s.yaw_rate, s.sideslip];
    let add = |a: &[f64; 5], k: &[f64; 5], h: f64| core::array::from_fn::<f64, 5, _>(|i| a[i] + h * k[i]);
    let k1 = derivative(&y0, v, steer, p);
    let k2 = derivative(&add(&y0, &k1, 0.5 * dt), v, steer, p);
    let k3 = derivative(&add(&y0, &k2, 0.5 * dt), v, steer, p);
    let k4 = derivative(&add(&y0, &k3, dt), v, steer, p);
    let n: [f64; 5] = core::array::from_fn(|i| y0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    if !(n[4].abs() <= MAX_SIDESLIP) || n.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericBlowup { beta_deg: n[4].to_degrees() });
    }
    Ok(SimState { x: n[0], y: n[1], yaw: n[2], yaw_rate: n[3], sideslip: n[4], speed: v })
}

/// Polyline reference with a curvature value per vertex; x strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct RefPath {
    pub points: Vec<(f64, f64)>,
    pub curvature: Vec<f64>,
}

/// Discrete curvature through each interior vertex and its neighbours (the
/// reciprocal circumradius, signed); end vertices copy their neighbour.
pub fn menger_curvature(points: &[(f64, f64)]) -> Vec<f64> {
    let n = points.len();
    let mut k = alloc::vec![0.0; n];
    for i in 1..n.saturating_sub(1) {
        let (a, b, c) = (points[i - 1], points[i], points[i + 1]);
        let ab = sqrt(sq(b.0 - a.0) + sq(b.1 - a.1));
        let bc = sqrt(sq(c.0 - b.0) + sq(c.1 - b.1));
        let ac = sqrt(sq(c.0 - a.0) + sq(c.1 - a.1));
        let cross = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
        let den = ab * bc * ac;
        k[i] = if den > 0.0 { 2.0 * cross / den } else { 0.0 };
    }
    if n >= 3 {
        k[0] = k[1];
        k[n - 1] = k[n - 2];
    }
    k
}

impl RefPath {
    pub fn new(points: Vec<(f64, f64)>, curvature: Vec<f64>) -> Result<Self> {
        if points.len() < 2 || points.len() != curvature.len() {
            return Err(Error::Invalid("reference path needs two or more points with curvature"));
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Invalid("reference path x must increase strictly"));
        }
        Ok(RefPath { points, curvature })
    }

    pub fn from_waypoints(w: &WaypointSet) -> Result<Self> {
        let k = menger_curvature(&w.points);
        RefPath::new(w.points.clone(), k)
    }

    pub fn start_x(&self) -> f64 {
        self.points[0].0
    }

    pub fn end_x(&self) -> f64 {
        self.points[self.points.len() - 1].0
    }

    /// Segment index i with x_i ≤ x < x_{i+1}, clamped to the ends.
    fn segment(&self, x: f64, hint: usize) -> usize {
        let last = self.points.len() - 2;
        let mut i = hint.min(last);
        while i > 0 && self.points[i].0 > x {
            i -= 1;
        }
        while i < last && self.points[i + 1].0 <= x {
            i += 1;
        }
        i
    }

    fn interp(&self, i: usize, x: f64) -> (f64, f64) {
        let (a, b) = (self.points[i], self.points[i + 1]);
        let t = ((x - a.0) / (b.0 - a.0)).clamp(0.0, 1.0);
        (a.1 + t * (b.1 - a.1), self.curvature[i] + t * (self.curvature[i + 1] - self.curvature[i]))
    }

    /// Lateral position and curvature at x, linearly interpolated.
    pub fn at(&self, x: f64) -> (f64, f64) {
        self.interp(self.segment(x, 0), x)
    }

    /// First point along the path, from segment `from` on, at distance `ld`
    /// from `p`.
    fn lookahead(&self, from: usize, p: (f64, f64), ld: f64) -> Option<(f64, f64)> {
        for i in from..self.points.len() - 1 {
            let (a, b) = (self.points[i], self.points[i + 1]);
            let db = sq(b.0 - p.0) + sq(b.1 - p.1);
            if db < ld * ld {
                continue;
            }
            // |a + t(b − a) − p| = ld on the segment, largest root
            let (dx, dy) = (b.0 - a.0, b.1 - a.1);
            let (fx, fy) = (a.0 - p.0, a.1 - p.1);
            let qa = dx * dx + dy * dy;
            let qb = 2.0 * (fx * dx + fy * dy);
            let qc = fx * fx + fy * fy - ld * ld;
            let disc = (qb * qb - 4.0 * qa * qc).max(0.0);
            let t = ((-qb + sqrt(disc)) / (2.0 * qa)).clamp(0.0, 1.0);
            return Some((a.0 + t * dx, a.1 + t * dy));
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerConfig {
    /// Lookahead distance per unit speed, seconds.
    pub lookahead_gain: f64,
    /// Steering update period; the log is sampled at the same rate.
    pub period: f64,
    pub max_cross_track: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig { lookahead_gain: 0.6, period: 0.01, max_cross_track: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub yaw_rate: f64,
    pub steer: f64,
    pub sideslip: f64,
    /// Reference path curvature at the vehicle's station, 1/m.
    pub curvature: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub dt: f64,
    pub samples: Vec<LogSample>,
}

/// Drive the model along `path` with pure pursuit until the lookahead point
/// would run off the end of the path. `dt` is the integration step and must
/// divide the controller period.
pub fn track_path(
    path: &RefPath,
    init: SimState,
    p: &BicycleParams,
    ctl: &ControllerConfig,
    dt: f64,
) -> Result<TrajectoryLog> {
    p.validate()?;
    let substeps = libm::round(ctl.period / dt);
    if !(substeps >= 1.0) || (substeps * dt - ctl.period).abs() > 1e-9 * ctl.period {
        return Err(Error::Invalid("integration step must divide the controller period"));
    }
    let substeps = substeps as usize;
    let ld = ctl.lookahead_gain * init.speed;
    if !(ld > 0.0) {
        return Err(Error::Invalid("lookahead must be positive"));
    }
    let wheelbase = p.wheelbase();
    let x_end = path.end_x() - ld;
    let mut s = init;
    let mut seg = 0usize;
    let mut samples = Vec::new();
    let mut tick = 0usize;
    loop {
        seg = path.segment(s.x, seg);
        let (y_ref, kappa) = path.interp(seg, s.x);
        let cross = (s.y - y_ref).abs();
        if cross > ctl.max_cross_track {
            return Err(Error::TrackingDiverged { error: cross });
        }
        let target = path.lookahead(seg, (s.x, s.y), ld).unwrap_or(path.points[path.points.len() - 1]);
        let alpha = atan2(target.1 - s.y, target.0 - s.x) - s.yaw;
        let steer = atan(2.0 * wheelbase * sin(alpha) / ld).clamp(-MAX_STEER, MAX_STEER);
        samples.push(LogSample {
            t: tick as f64 * ctl.period,
            x: s.x,
            y: s.y,
            yaw: s.yaw,
            yaw_rate: s.yaw_rate,
            steer,
            sideslip: s.sideslip,
            curvature: kappa,
        });
        if s.x >= x_end {
            break;
        }
        for _ in 0..substeps {
            s = step_dynamics(&s, steer, p, dt)?;
        }
        tick += 1;
    }
    Ok(TrajectoryLog { dt: ctl.period, samples })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LcMetrics {
    /// Arc length driven between the 5% and 95% crossings.
    pub path_length: f64,
    pub lc_start_x: f64,
    pub lc_duration: f64,
    pub max_yaw: f64,
    pub max_yaw_rate: f64,
    pub max_front_tire_angle: f64,
    pub max_sideslip: f64,
    pub max_curvature: f64,
    pub terminal_lane_offset: f64,
}

impl LcMetrics {
    pub const FIELDS: [&'static str; 9] = [
        "path_length",
        "lc_start_x",
        "lc_duration",
        "max_yaw",
        "max_yaw_rate",
        "max_front_tire_angle",
        "max_sideslip",
        "max_curvature",
        "terminal_lane_offset",
    ];

    pub fn values(&self) -> [f64; 9] {
        [
            self.path_length,
            self.lc_start_x,
            self.lc_duration,
            self.max_yaw,
            self.max_yaw_rate,
            self.max_front_tire_angle,
            self.max_sideslip,
            self.max_curvature,
            self.terminal_lane_offset,
        ]
    }
}

pub const MIN_LC_DISPLACEMENT: f64 = 0.5;

pub fn polyline_length(log: &TrajectoryLog) -> f64 {
    log.samples.windows(2).map(|w| sqrt(sq(w[1].x - w[0].x) + sq(w[1].y - w[0].y))).sum()
}

/// Fractional sample index where the displacement first reaches `level`.
fn crossing(disp: &[f64], level: f64) -> Option<f64> {
    if disp.first().is_some_and(|&d| d >= level) {
        return Some(0.0);
    }
    disp.windows(2).position(|w| w[1] >= level).map(|i| {
        let (a, b) = (disp[i], disp[i + 1]);
        i as f64 + (level - a) / (b - a)
    })
}

fn sample_at(log: &TrajectoryLog, f: f64) -> LogSample {
    let i = (f as usize).min(log.samples.len() - 1);
    let j = (i + 1).min(log.samples.len() - 1);
    let t = f - i as f64;
    let (a, b) = (log.samples[i], log.samples[j]);
    let lerp = |u: f64, v: f64| u + t * (v - u);
    LogSample {
        t: lerp(a.t, b.t),
        x: lerp(a.x, b.x),
        y: lerp(a.y, b.y),
        yaw: lerp(a.yaw, b.yaw),
        yaw_rate: lerp(a.yaw_rate, b.yaw_rate),
        steer: lerp(a.steer, b.steer),
        sideslip: lerp(a.sideslip, b.sideslip),
        curvature: lerp(a.curvature, b.curvature),
    }
}

/// Lane-change boundaries are the 5% and 95% crossings of the displacement
/// from the starting lateral position toward `target_lane_center`.
pub fn metrics(log: &TrajectoryLog, target_lane_center: f64) -> Result<LcMetrics> {
    let first = *log.samples.first().ok_or(Error::Invalid("empty trajectory log"))?;
    let total = target_lane_center - first.y;
    let dir = total.signum();
    let disp: Vec<f64> = log.samples.iter().map(|s| dir * (s.y - first.y)).collect();
    let reached = disp.iter().copied().fold(0.0, f64::max);
    if total.abs() < MIN_LC_DISPLACEMENT || reached < MIN_LC_DISPLACEMENT {
        return Err(Error::NoLaneChangeDetected { displacement: reached });
    }
    let f5 = crossing(&disp, 0.05 * total.abs());
    let f95 = crossing(&disp, 0.95 * total.abs());
    let (Some(f5), Some(f95)) = (f5, f95) else {
        return Err(Error::NoLaneChangeDetected { displacement: reached });
    };
    let (s5, s95) = (sample_at(log, f5), sample_at(log, f95));
    let (i5, i95) = (f5 as usize + 1, f95 as usize);
    let mut path_length = 0.0;
    let mut prev = (s5.x, s5.y);
    for s in log.samples.iter().take(i95 + 1).skip(i5) {
        path_length += sqrt(sq(s.x - prev.0) + sq(s.y - prev.1));
        prev = (s.x, s.y);
    }
    path_length += sqrt(sq(s95.x - prev.0) + sq(s95.y - prev.1));
    let max_abs = |f: fn(&LogSample) -> f64| log.samples.iter().map(f).fold(0.0, |m: f64, v| m.max(v.abs()));
    Ok(LcMetrics {
        path_length,
        lc_start_x: s5.x,
        lc_duration: s95.t - s5.t,
        max_yaw: max_abs(|s| s.yaw).to_degrees(),
        max_yaw_rate: max_abs(|s| s.yaw_rate).to_degrees(),
        max_front_tire_angle: max_abs(|s| s.steer).to_degrees(),
        max_sideslip: max_abs(|s| s.sideslip).to_degrees(),
        max_curvature: max_abs(|s| s.curvature),
        terminal_lane_offset: log.samples[log.samples.len() - 1].y - target_lane_center,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_steer_is_equilibrium() {
        let s = SimState::straight(0.0, 1.0, 20.0);
        let n = step_dynamics(&s, 0.0, &BicycleParams::default(), 0.01).unwrap();
        assert!((n.x - 0.2).abs() < 1e-14);
        assert_eq!((n.y, n.yaw, n.yaw_rate, n.sideslip), (1.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn step_preconditions() {
        let s = SimState::straight(0.0, 0.0, 20.0);
        let p = BicycleParams::default();
        assert!(step_dynamics(&s, 0.0, &p, 0.06).is_err());
        assert!(step_dynamics(&s, 0.6, &p, 0.01).is_err());
    }

    #[test]
    fn blowup_is_reported() {
        let s = SimState { sideslip: 0.5235, ..SimState::straight(0.0, 0.0, 1.0) };
        let p = BicycleParams::default();
        assert!(matches!(step_dynamics(&s, MAX_STEER, &p, 0.05), Err(Error::NumericBlowup { .. })));
    }

    #[test]
    fn menger_on_a_circle() {
        let r = 50.0;
        let pts: Vec<(f64, f64)> = (0..20).map(|i| {
            let a = -0.3 + i as f64 * 0.03;
            (r * sin(a), r - r * cos(a))
        }).collect();
        for k in menger_curvature(&pts) {
            assert!((k - 1.0 / r).abs() < 1e-9);
        }
    }

    fn straight_log(len: f64) -> TrajectoryLog {
        let samples = (0..=100)
            .map(|i| LogSample {
                t: i as f64 * 0.01,
                x: len * i as f64 / 100.0,
                y: 2.0,
                yaw: 0.0,
                yaw_rate: 0.0,
                steer: 0.0,
                sideslip: 0.0,
                curvature: 0.0,
            })
            .collect();
        TrajectoryLog { dt: 0.01, samples }
    }

    #[test]
    fn straight_log_has_no_lane_change() {
        let log = straight_log(100.0);
        assert!((polyline_length(&log) - 100.0).abs() < 1e-9);
        assert!(matches!(metrics(&log, 5.0), Err(Error::NoLaneChangeDetected { .. })));
    }

    #[test]
    fn straight_tracking() {
        let pts: Vec<(f64, f64)> = (0..=300).map(|i| (i as f64, 3.0)).collect();
        let path = RefPath::new(pts, alloc::vec![0.0; 301]).unwrap();
        let log = track_path(&path, SimState::straight(0.0, 3.0, 25.0), &BicycleParams::default(), &ControllerConfig::default(), 0.01).unwrap();
        assert!(log.samples.iter().all(|s| (s.y - 3.0).abs() < 0.01 && s.yaw.abs() < 1e-12));
        assert!(log.samples.last().unwrap().x >= 300.0 - 15.0);
    }

    #[test]
    fn period_must_be_a_multiple_of_dt() {
        let path = RefPath::new(alloc::vec![(0.0, 0.0), (100.0, 0.0)], alloc::vec![0.0; 2]).unwrap();
        let r = track_path(&path, SimState::straight(0.0, 0.0, 10.0), &BicycleParams::default(), &ControllerConfig::default(), 0.003);
        assert!(r.is_err());
    }
}
