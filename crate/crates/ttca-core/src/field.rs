//! Attractive, road and obstacle potentials, their gradient, and the
//! gradient-descent waypoint generator.

use alloc::vec::Vec;
use libm::{exp, log, sqrt};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RoadGeometry {
    pub edge_lower_y: f64,
    pub edge_upper_y: f64,
    /// Strictly increasing, strictly between the edges.
    pub lane_divider_ys: Vec<f64>,
    pub lane_width: f64,
}

impl RoadGeometry {
    /// Evenly spaced lanes starting at `edge_lower_y`.
    pub fn uniform(edge_lower_y: f64, lane_width: f64, lanes: usize) -> Self {
        let lane_divider_ys = (1..lanes).map(|i| edge_lower_y + i as f64 * lane_width).collect();
        RoadGeometry {
            edge_lower_y,
            edge_upper_y: edge_lower_y + lanes as f64 * lane_width,
            lane_divider_ys,
            lane_width,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.edge_lower_y < self.edge_upper_y) {
            return Err(Error::Invalid("road: edge_lower_y must be below edge_upper_y"));
        }
        if !(self.lane_width > 0.0) {
            return Err(Error::Invalid("road: lane_width must be positive"));
        }
        let mut prev = self.edge_lower_y;
        for &d in &self.lane_divider_ys {
            if !(d > prev) {
                return Err(Error::Invalid("road: dividers must increase strictly inside the edges"));
            }
            prev = d;
        }
        if !(prev < self.edge_upper_y) {
            return Err(Error::Invalid("road: dividers must lie strictly inside the edges"));
        }
        Ok(())
    }

    /// Lane boundaries, lowest lane first.
    pub fn lanes(&self) -> Vec<(f64, f64)> {
        let mut b = Vec::with_capacity(self.lane_divider_ys.len() + 2);
        b.push(self.edge_lower_y);
        b.extend_from_slice(&self.lane_divider_ys);
        b.push(self.edge_upper_y);
        b.windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn lane_index(&self, y: f64) -> Option<usize> {
        self.lanes().iter().position(|&(lo, hi)| y >= lo && y < hi)
    }

    pub fn lane_center(&self, index: usize) -> Option<f64> {
        self.lanes().get(index).map(|&(lo, hi)| 0.5 * (lo + hi))
    }

    pub fn contains(&self, y: f64) -> bool {
        y > self.edge_lower_y && y < self.edge_upper_y
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleParams {
    /// kg
    pub mass: f64,
    /// Positive deceleration magnitude, m/s².
    pub max_brake_decel: f64,
    pub wheelbase: f64,
    pub width: f64,
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        let ok = [self.mass, self.max_brake_decel, self.wheelbase, self.width]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid("vehicle parameters must be positive"))
        }
    }
}

impl Default for VehicleParams {
    fn default() -> Self {
        VehicleParams { mass: 1500.0, max_brake_decel: 6.0, wheelbase: 2.8, width: 1.8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EgoState {
    pub x: f64,
    pub y: f64,
    pub speed: f64,
    pub accel: f64,
    pub params: VehicleParams,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObstacleState {
    pub x: f64,
    pub y: f64,
    pub speed: f64,
    pub accel: f64,
    /// radians, |heading| < π/2
    pub heading: f64,
    pub params: VehicleParams,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldConfig {
    pub lambda: f64,
    pub xi: f64,
    pub a_lane: f64,
    pub sigma_lane: f64,
    pub a_obs: f64,
    pub u_min: f64,
    pub x_target: f64,
    /// Stands in for (Y − Y_o) inside σy so the field is a plain function of position.
    pub lateral_ref_offset: f64,
    /// Lateral shift of the obstacle bump's centre. Zero keeps the bump on the
    /// obstacle; a head-on start on the obstacle's centreline is otherwise a
    /// ridge that descent never leaves. Positive pushes the path to lower y.
    pub pass_bias: f64,
    /// Masses enter Dmin divided by this (1000 gives tonnes).
    pub mass_unit: f64,
    pub edge_eps: f64,
    /// Report NonpositiveSafetyDistance instead of clamping Dmin.
    pub strict_dmin: bool,
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig {
            lambda: 0.3,
            xi: 1.0,
            a_lane: 0.25,
            sigma_lane: 1.0,
            a_obs: 100.0,
            u_min: 0.5,
            x_target: 270.0,
            lateral_ref_offset: 2.4,
            pass_bias: 0.0,
            mass_unit: 1000.0,
            edge_eps: 1e-3,
            strict_dmin: false,
        }
    }
}

impl FieldConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = [self.lambda, self.xi, self.a_lane, self.sigma_lane, self.a_obs];
        if !pos.iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(Error::Invalid("field: lambda, xi, a_lane, sigma_lane, a_obs must be positive"));
        }
        if !(self.u_min > 0.0 && self.u_min < self.a_obs && self.u_min < 1.0) {
            return Err(Error::Invalid("field: u_min must lie in (0, min(1, a_obs))"));
        }
        if !(self.lateral_ref_offset > 0.0) {
            return Err(Error::Invalid("field: lateral_ref_offset must be positive"));
        }
        if !(self.mass_unit > 0.0 && self.edge_eps > 0.0) {
            return Err(Error::Invalid("field: mass_unit and edge_eps must be positive"));
        }
        Ok(())
    }

    /// Edge scale that puts a zero of the lateral road slope at `lane_center`,
    /// so the divider bump and the walls balance there.
    pub fn balanced_xi(&self, road: &RoadGeometry, veh: &VehicleParams, lane_center: f64) -> Result<f64> {
        let (lo, hi) = walls(road, veh);
        let wall = inv_cube(lane_center - lo) + inv_cube(lane_center - hi);
        let div: f64 = road
            .lane_divider_ys
            .iter()
            .map(|&d| divider_slope(lane_center, d, self.a_lane, self.sigma_lane))
            .sum();
        let xi = div / wall;
        if xi.is_finite() && xi > 0.0 {
            Ok(xi)
        } else {
            Err(Error::Invalid("field: no positive edge scale balances this lane centre"))
        }
    }
}

/// The two singular walls, l_w/2 inside each road edge.
fn walls(road: &RoadGeometry, veh: &VehicleParams) -> (f64, f64) {
    (road.edge_lower_y + 0.5 * veh.width, road.edge_upper_y - 0.5 * veh.width)
}

fn inv_cube(u: f64) -> f64 {
    1.0 / (u * u * u)
}

fn divider_slope(y: f64, d: f64, a: f64, sigma: f64) -> f64 {
    let u = y - d;
    -a * u / (sigma * sigma) * exp(-u * u / (2.0 * sigma * sigma))
}

pub fn attractive_potential(x: f64, cfg: &FieldConfig) -> f64 {
    let d = x - cfg.x_target;
    0.5 * cfg.lambda * d * d
}

fn check_band(y: f64, road: &RoadGeometry, veh: &VehicleParams, eps: f64) -> Result<(f64, f64)> {
    let (lo, hi) = walls(road, veh);
    if y - lo < eps || hi - y < eps {
        return Err(Error::EdgeSingularity { y });
    }
    Ok((lo, hi))
}

pub fn road_potential(y: f64, road: &RoadGeometry, veh: &VehicleParams, cfg: &FieldConfig) -> Result<f64> {
    let (lo, hi) = check_band(y, road, veh, cfg.edge_eps)?;
    let el = 1.0 / (y - lo);
    let eu = 1.0 / (y - hi);
    let mut p = 0.5 * cfg.xi * (el * el + eu * eu);
    let s2 = 2.0 * cfg.sigma_lane * cfg.sigma_lane;
    for &d in &road.lane_divider_ys {
        p += cfg.a_lane * exp(-(y - d) * (y - d) / s2);
    }
    Ok(p)
}

fn road_slope(y: f64, road: &RoadGeometry, veh: &VehicleParams, cfg: &FieldConfig) -> Result<f64> {
    let (lo, hi) = check_band(y, road, veh, cfg.edge_eps)?;
    let mut g = -cfg.xi * (inv_cube(y - lo) + inv_cube(y - hi));
    for &d in &road.lane_divider_ys {
        g += divider_slope(y, d, cfg.a_lane, cfg.sigma_lane);
    }
    Ok(g)
}

/// Dmin and the two spreads of the obstacle bump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObstacleSpread {
    pub dmin: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
}

pub fn obstacle_spread(obs: &ObstacleState, ego: &EgoState, cfg: &FieldConfig) -> Result<ObstacleSpread> {
    let m = ego.params.mass / cfg.mass_unit;
    let mo = obs.params.mass / cfg.mass_unit;
    let raw = m * ego.speed * ego.speed / (2.0 * ego.params.max_brake_decel)
        - mo * obs.speed * obs.speed / (2.0 * obs.params.max_brake_decel)
        + 0.5 * (ego.params.wheelbase + obs.params.wheelbase);
    let dmin = if cfg.strict_dmin {
        if raw <= 0.0 {
            return Err(Error::NonpositiveSafetyDistance { dmin: raw });
        }
        raw
    } else {
        raw.max(0.5 * (ego.params.wheelbase + obs.params.wheelbase))
    };
    let sigma_x = dmin * sqrt(-1.0 / log(cfg.u_min));
    let r = cfg.lateral_ref_offset;
    let sigma_y = sqrt(-r * r / (2.0 * log(cfg.u_min / cfg.a_obs)));
    Ok(ObstacleSpread { dmin, sigma_x, sigma_y })
}

/// Exponent argument q with P = A·exp(−C1/2·q), and its gradient.
fn obstacle_quadratic(x: f64, y: f64, obs: &ObstacleState, s: &ObstacleSpread, bias: f64) -> (f64, f64, f64) {
    let dx = x - obs.x;
    let dy = y - (obs.y + bias);
    let psi = obs.heading;
    let c2 = 2.0 * psi * dx * dy / (s.sigma_x * s.sigma_y);
    let q = dx * dx / s.sigma_x + dy * dy / s.sigma_y - c2;
    let qx = 2.0 * dx / s.sigma_x - 2.0 * psi * dy / (s.sigma_x * s.sigma_y);
    let qy = 2.0 * dy / s.sigma_y - 2.0 * psi * dx / (s.sigma_x * s.sigma_y);
    (q, qx, qy)
}

pub fn obstacle_potential(x: f64, y: f64, obs: &ObstacleState, ego: &EgoState, cfg: &FieldConfig) -> Result<f64> {
    let s = obstacle_spread(obs, ego, cfg)?;
    Ok(obstacle_value(x, y, obs, &s, cfg))
}

fn obstacle_value(x: f64, y: f64, obs: &ObstacleState, s: &ObstacleSpread, cfg: &FieldConfig) -> f64 {
    let c1 = 1.0 - obs.heading * obs.heading;
    let (q, _, _) = obstacle_quadratic(x, y, obs, s, cfg.pass_bias);
    cfg.a_obs * exp(-0.5 * c1 * q)
}

/// Everything the field needs, with the obstacle spread resolved once.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub road: RoadGeometry,
    pub ego: EgoState,
    pub obstacle: Option<ObstacleState>,
    pub cfg: FieldConfig,
    spread: Option<ObstacleSpread>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientMode {
    Analytic,
    /// Central differences with the given step.
    Numeric,
}

pub const DEFAULT_FD_STEP: f64 = 1e-4;

impl Scene {
    pub fn new(road: RoadGeometry, ego: EgoState, obstacle: Option<ObstacleState>, cfg: FieldConfig) -> Result<Self> {
        road.validate()?;
        cfg.validate()?;
        ego.params.validate()?;
        let spread = match &obstacle {
            Some(o) => {
                o.params.validate()?;
                Some(obstacle_spread(o, &ego, &cfg)?)
            }
            None => None,
        };
        Ok(Scene { road, ego, obstacle, cfg, spread })
    }

    pub fn spread(&self) -> Option<ObstacleSpread> {
        self.spread
    }

    pub fn total_potential(&self, x: f64, y: f64) -> Result<f64> {
        let mut p = attractive_potential(x, &self.cfg) + road_potential(y, &self.road, &self.ego.params, &self.cfg)?;
        if let (Some(o), Some(s)) = (&self.obstacle, &self.spread) {
            p += obstacle_value(x, y, o, s, &self.cfg);
        }
        Ok(p)
    }

    pub fn gradient(&self, x: f64, y: f64, mode: GradientMode) -> Result<(f64, f64)> {
        match mode {
            GradientMode::Analytic => self.analytic_gradient(x, y),
            GradientMode::Numeric => self.numeric_gradient(x, y, DEFAULT_FD_STEP),
        }
    }

    fn analytic_gradient(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        let mut gx = self.cfg.lambda * (x - self.cfg.x_target);
        let mut gy = road_slope(y, &self.road, &self.ego.params, &self.cfg)?;
        if let (Some(o), Some(s)) = (&self.obstacle, &self.spread) {
            let c1 = 1.0 - o.heading * o.heading;
            let (q, qx, qy) = obstacle_quadratic(x, y, o, s, self.cfg.pass_bias);
            let p = self.cfg.a_obs * exp(-0.5 * c1 * q);
            gx -= 0.5 * c1 * p * qx;
            gy -= 0.5 * c1 * p * qy;
        }
        Ok((gx, gy))
    }

    pub fn numeric_gradient(&self, x: f64, y: f64, h: f64) -> Result<(f64, f64)> {
        let gx = (self.total_potential(x + h, y)? - self.total_potential(x - h, y)?) / (2.0 * h);
        let gy = (self.total_potential(x, y + h)? - self.total_potential(x, y - h)?) / (2.0 * h);
        Ok((gx, gy))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaypointSet {
    pub points: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
}

impl WaypointSet {
    pub fn with_unit_weights(points: Vec<(f64, f64)>) -> Self {
        let weights = alloc::vec![1.0; points.len()];
        WaypointSet { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.len() != self.weights.len() {
            return Err(Error::Invalid("waypoints: one weight per point"));
        }
        if !self.weights.iter().all(|w| w.is_finite() && *w > 0.0) {
            return Err(Error::Invalid("waypoints: weights must be positive"));
        }
        if self.points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Invalid("waypoints: x must increase strictly"));
        }
        if self.points.iter().any(|p| !(p.0.is_finite() && p.1.is_finite())) {
            return Err(Error::Invalid("waypoints: non-finite coordinate"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentConfig {
    pub step_len: f64,
    pub max_steps: usize,
    /// Minimum forward component of a unit step.
    pub forward_floor: f64,
}

impl Default for DescentConfig {
    fn default() -> Self {
        DescentConfig { step_len: 0.5, max_steps: 100_000, forward_floor: 0.05 }
    }
}

/// Walk down the normalized gradient in fixed arc-length steps from the ego
/// position until x reaches the attractive target.
pub fn descend_path(scene: &Scene, dc: &DescentConfig) -> Result<WaypointSet> {
    if !(dc.step_len > 0.0) {
        return Err(Error::Invalid("descent: step_len must be positive"));
    }
    let (mut x, mut y) = (scene.ego.x, scene.ego.y);
    scene.total_potential(x, y)?;
    let mut points = alloc::vec![(x, y)];
    let floor = dc.forward_floor;
    while x < scene.cfg.x_target {
        if points.len() > dc.max_steps {
            return Err(Error::MaxStepsExceeded(dc.max_steps));
        }
        let (gx, gy) = scene.gradient(x, y, GradientMode::Analytic)?;
        let n = sqrt(gx * gx + gy * gy);
        if n < 1e-9 {
            return Err(Error::LocalMinimumStall { x, y });
        }
        let (mut ux, mut uy) = (-gx / n, -gy / n);
        if ux < floor {
            ux = floor;
            uy = libm::copysign(sqrt(1.0 - floor * floor), uy);
        }
        x += dc.step_len * ux;
        y += dc.step_len * uy;
        points.push((x, y));
    }
    Ok(WaypointSet::with_unit_weights(points))
}
