//! The two planners end to end: descend the field, optionally refit with the
//! TTC-constrained cubic, track with the bicycle model and measure.
//!
//! Planning happens once, at t = 0, in a frame that moves with the obstacle:
//! the obstacle is frozen at its initial position and the ego advances at the
//! closing speed v − v_o. A planned point at relative station x is reached
//! after (x − x_ego)/(v − v_o) seconds, by which time the ego has covered
//! v/(v − v_o) times that distance over the road, so the tracked reference is
//! the planned path stretched longitudinally by that factor.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{
    descend_path, DescentConfig, EgoState, FieldConfig, ObstacleSpread, ObstacleState, RoadGeometry, Scene, VehicleParams,
    WaypointSet,
};
use crate::fit::{
    build_constraints, compute_window, fit_constrained, max_violation, ConstraintWindow, CubicCoeffs, FitReport,
    PointBound, Side, DEFAULT_SAMPLE_SPACING, DEFAULT_T_LC,
};
use crate::sim::{metrics, track_path, BicycleParams, ControllerConfig, LcMetrics, RefPath, SimState, TrajectoryLog};
use crate::ttc::{gate_lane_change, time_to_collision, Gate, LongitudinalPair, TtcResult, DEFAULT_D_STOP, DEFAULT_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TtcConfig {
    pub threshold: f64,
    pub d_stop: f64,
    /// Time reserved for the lane change itself.
    pub t_lc: f64,
}

impl Default for TtcConfig {
    fn default() -> Self {
        TtcConfig { threshold: DEFAULT_THRESHOLD, d_stop: DEFAULT_D_STOP, t_lc: DEFAULT_T_LC }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    /// When false the TTC-aware planner tracks the raw waypoints.
    pub enabled: bool,
    pub sample_spacing: f64,
    /// Share of the fitted waypoints at each end of the maneuver that are
    /// moved onto the lane centres.
    pub anchor_fraction: f64,
    pub anchor_weight: f64,
    /// Half-width of the band the cubic's ends must hit around the lane centres.
    pub endpoint_tolerance: f64,
    /// Distance from the obstacle's lateral position to the near corridor
    /// bound; `None` uses half a lane, i.e. the lane divider.
    pub corridor_offset: Option<f64>,
    /// Explicit (y_lower, y_upper), replacing the derived corridor.
    pub corridor: Option<(f64, f64)>,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            enabled: true,
            sample_spacing: DEFAULT_SAMPLE_SPACING,
            anchor_fraction: 0.1,
            anchor_weight: 20.0,
            endpoint_tolerance: 0.02,
            corridor_offset: None,
            corridor: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub bicycle: BicycleParams,
    /// Integration step.
    pub dt: f64,
    pub controller: ControllerConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { bicycle: BicycleParams::default(), dt: 0.01, controller: ControllerConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub road: RoadGeometry,
    pub ego: EgoState,
    pub obstacle: Option<ObstacleState>,
    pub field: FieldConfig,
    pub descent: DescentConfig,
    pub ttc: TtcConfig,
    pub fit: FitConfig,
    pub sim: SimConfig,
    /// Lane index to move into; `None` picks the neighbour on the passing side.
    pub target_lane: Option<usize>,
}

impl Scenario {
    /// Derived defaults: x_target 150 m past the obstacle (270 m past the ego
    /// without one), σy offset of half a lane plus half a vehicle, a small
    /// pass bias towards lower y and the edge scale that balances the target
    /// lane centre.
    ///
    /// The field defaults are sized for 3 m lanes. For a width k·3 m the
    /// divider spread scales by k and the divider and obstacle heights by k²,
    /// which keeps the lateral pull per metre of lateral travel unchanged.
    pub fn new(road: RoadGeometry, ego: EgoState, obstacle: Option<ObstacleState>) -> Result<Self> {
        let x_target = obstacle.as_ref().map_or(ego.x + 270.0, |o| o.x + 150.0);
        let k = road.lane_width / 3.0;
        let base = FieldConfig::default();
        let field = FieldConfig {
            lateral_ref_offset: 0.5 * road.lane_width + 0.5 * ego.params.width,
            pass_bias: 0.25,
            x_target,
            sigma_lane: base.sigma_lane * k,
            a_lane: base.a_lane * k * k,
            a_obs: base.a_obs * k * k,
            ..base
        };
        let mut s = Scenario {
            road,
            ego,
            obstacle,
            field,
            descent: DescentConfig::default(),
            ttc: TtcConfig::default(),
            fit: FitConfig::default(),
            sim: SimConfig::default(),
            target_lane: None,
        };
        s.rebalance_xi()?;
        Ok(s)
    }

    /// Two 3 m lanes, ego at (0, 6) doing 30 m/s behind an obstacle at
    /// (120, 6) doing 25 m/s.
    pub fn highway() -> Self {
        let veh = VehicleParams::default();
        let ego = EgoState { x: 0.0, y: 6.0, speed: 30.0, accel: 0.0, params: veh };
        let obstacle = ObstacleState { x: 120.0, y: 6.0, speed: 25.0, accel: 0.0, heading: 0.0, params: veh };
        Scenario::new(RoadGeometry::uniform(1.5, 3.0, 2), ego, Some(obstacle)).expect("highway defaults are valid")
    }

    /// Reset ξ so the lateral road slope vanishes at the target lane centre.
    pub fn rebalance_xi(&mut self) -> Result<()> {
        self.road.validate()?;
        let centre = match self.target_lane_index() {
            Ok(_) => self.target_lane_center()?,
            Err(_) => self.ego_lane_center()?,
        };
        self.field.xi = self.field.balanced_xi(&self.road, &self.ego.params, centre)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.road.validate()?;
        self.field.validate()?;
        self.ego.params.validate()?;
        self.sim.bicycle.validate()?;
        if !(self.ego.speed > 0.0) {
            return Err(Error::Invalid("ego speed must be positive"));
        }
        if !self.road.contains(self.ego.y) {
            return Err(Error::Invalid("ego must start on the road"));
        }
        if let Some(o) = &self.obstacle {
            o.params.validate()?;
            if !(o.speed >= 0.0) {
                return Err(Error::Invalid("obstacle speed must be nonnegative"));
            }
            if !(o.heading.abs() < core::f64::consts::FRAC_PI_2) {
                return Err(Error::Invalid("obstacle heading must be within ±90 degrees"));
            }
            if !self.road.contains(o.y) {
                return Err(Error::Invalid("obstacle must lie between the road edges"));
            }
            if !(o.x > self.ego.x) {
                return Err(Error::Invalid("obstacle must be ahead of the ego"));
            }
        }
        let wb = self.sim.bicycle.wheelbase();
        if (wb - self.ego.params.wheelbase).abs() > 1e-9 {
            return Err(Error::Invalid("l_f + l_r must equal the ego wheelbase"));
        }
        let ttc = &self.ttc;
        if !(ttc.threshold > 0.0 && ttc.d_stop >= 0.0 && ttc.t_lc > 0.0) {
            return Err(Error::Invalid("ttc: threshold and t_lc positive, d_stop nonnegative"));
        }
        let f = &self.fit;
        if !(f.sample_spacing > 0.0
            && f.anchor_fraction >= 0.0
            && f.anchor_fraction < 0.5
            && f.anchor_weight > 0.0
            && f.endpoint_tolerance > 0.0)
        {
            return Err(Error::Invalid("fit: spacing, anchor and tolerance settings out of range"));
        }
        if !(self.sim.dt > 0.0 && self.sim.dt <= crate::sim::MAX_DT) {
            return Err(Error::Invalid("sim: dt must lie in (0, 0.05] s"));
        }
        self.ego_lane()?;
        self.target_lane_index()?;
        Ok(())
    }

    pub fn ego_lane(&self) -> Result<usize> {
        self.road.lane_index(self.ego.y).ok_or(Error::Invalid("ego is not in a lane"))
    }

    pub fn target_lane_index(&self) -> Result<usize> {
        let lanes = self.road.lanes().len();
        if let Some(t) = self.target_lane {
            return if t < lanes { Ok(t) } else { Err(Error::Invalid("target lane does not exist")) };
        }
        let ego = self.ego_lane()?;
        let lower = ego.checked_sub(1);
        let upper = (ego + 1 < lanes).then_some(ego + 1);
        let pick = if self.field.pass_bias < 0.0 { upper.or(lower) } else { lower.or(upper) };
        pick.ok_or(Error::Invalid("single-lane road has no target lane"))
    }

    pub fn target_lane_center(&self) -> Result<f64> {
        let t = self.target_lane_index()?;
        Ok(self.road.lane_center(t).expect("index checked"))
    }

    pub fn ego_lane_center(&self) -> Result<f64> {
        Ok(self.road.lane_center(self.ego_lane()?).expect("index checked"))
    }

    /// Longitudinal stretch from the planning frame to the road.
    pub fn frame(&self) -> Result<Frame> {
        match &self.obstacle {
            None => Ok(Frame { origin: self.ego.x, stretch: 1.0 }),
            Some(o) => {
                let closing = self.ego.speed - o.speed;
                if !(closing > 0.0) {
                    return Err(Error::Invalid("ego is not closing on the obstacle"));
                }
                Ok(Frame { origin: self.ego.x, stretch: self.ego.speed / closing })
            }
        }
    }

    fn scene(&self) -> Result<Scene> {
        Scene::new(self.road.clone(), self.ego, self.obstacle, self.field)
    }
}

/// x_road = origin + stretch·(x_plan − origin)
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub origin: f64,
    pub stretch: f64,
}

impl Frame {
    pub fn to_road(&self, x: f64) -> f64 {
        self.origin + self.stretch * (x - self.origin)
    }

    pub fn to_plan(&self, x: f64) -> f64 {
        self.origin + (x - self.origin) / self.stretch
    }

    pub fn path_to_road(&self, w: &WaypointSet) -> WaypointSet {
        let points = w.points.iter().map(|&(x, y)| (self.to_road(x), y)).collect();
        WaypointSet { points, weights: w.weights.clone() }
    }

    /// The planned cubic re-expressed over road stations.
    pub fn cubic_to_road(&self, c: &CubicCoeffs) -> CubicCoeffs {
        let q = 1.0 / self.stretch;
        c.compose_affine(self.origin * (1.0 - q), q)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanRun {
    /// Descent output in the planning frame.
    pub waypoints: WaypointSet,
    /// Tracked reference over road stations.
    pub path: RefPath,
    pub log: TrajectoryLog,
    pub metrics: LcMetrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TtcaRun {
    pub run: PlanRun,
    pub ttc: TtcResult,
    /// Window as computed, before clipping to the maneuver.
    pub window: ConstraintWindow,
    /// Maneuver interval [x0, x1] in the planning frame.
    pub maneuver: (f64, f64),
    /// `None` when fitting is disabled.
    pub fit: Option<FitReport>,
    /// The fitted cubic over road stations.
    pub cubic: Option<CubicCoeffs>,
    /// Corridor violation of the cubic on a 10× finer grid.
    pub fine_grid_violation: f64,
}

fn track(s: &Scenario, path: RefPath) -> Result<(TrajectoryLog, LcMetrics)> {
    let init = SimState::straight(s.ego.x, s.ego.y, s.ego.speed);
    let log = track_path(&path, init, &s.sim.bicycle, &s.sim.controller, s.sim.dt)?;
    let m = metrics(&log, s.target_lane_center()?)?;
    Ok((log, m))
}

pub fn run_cpf(s: &Scenario) -> Result<PlanRun> {
    s.validate()?;
    let frame = s.frame()?;
    let waypoints = descend_path(&s.scene()?, &s.descent)?;
    let path = RefPath::from_waypoints(&frame.path_to_road(&waypoints))?;
    let (log, metrics) = track(s, path.clone())?;
    Ok(PlanRun { waypoints, path, log, metrics })
}

/// Corridor inside the target lane: from the outer edge plus half a vehicle
/// width to the obstacle's lateral position minus `corridor_offset`.
pub fn corridor(s: &Scenario) -> Result<(f64, f64)> {
    if let Some(c) = s.fit.corridor {
        return Ok(c);
    }
    let obs = s.obstacle.as_ref().ok_or(Error::Invalid("corridor needs an obstacle"))?;
    let (lo, hi) = s.road.lanes()[s.target_lane_index()?];
    let half_w = 0.5 * s.ego.params.width;
    let offset = s.fit.corridor_offset.unwrap_or(0.5 * s.road.lane_width);
    if 0.5 * (lo + hi) < obs.y {
        Ok((lo + half_w, obs.y - offset))
    } else {
        Ok((obs.y + offset, hi - half_w))
    }
}

/// Points to fit over the maneuver interval, with the ends moved onto the
/// lane centres they must join.
fn maneuver_waypoints(s: &Scenario, w: &WaypointSet, x0: f64, x1: f64) -> Result<WaypointSet> {
    let points: Vec<(f64, f64)> = w.points.iter().copied().filter(|p| p.0 >= x0 && p.0 <= x1).collect();
    let n = points.len();
    let mut out = WaypointSet::with_unit_weights(points);
    let k = libm::ceil(s.fit.anchor_fraction * n as f64) as usize;
    if k > 0 && 2 * k <= n {
        let (from, to) = (s.ego_lane_center()?, s.target_lane_center()?);
        for i in 0..k {
            out.points[i].1 = from;
            out.weights[i] = s.fit.anchor_weight;
            out.points[n - 1 - i].1 = to;
            out.weights[n - 1 - i] = s.fit.anchor_weight;
        }
    }
    Ok(out)
}

fn band(x: f64, centre: f64, tol: f64) -> [PointBound; 2] {
    [PointBound { x, y: centre + tol, side: Side::Upper }, PointBound { x, y: centre - tol, side: Side::Lower }]
}

/// Lane centre before `x0` and after `x1`, the cubic in between, sampled at
/// `ds` over road stations.
fn composite_path(from: f64, to: f64, cubic: &CubicCoeffs, x0: f64, x1: f64, x_start: f64, x_end: f64, ds: f64) -> Result<RefPath> {
    let n = libm::ceil((x_end - x_start) / ds) as usize;
    let mut pts = Vec::with_capacity(n + 3);
    let mut kappa = Vec::with_capacity(n + 3);
    let mut push = |x: f64| {
        let (y, k) = if x < x0 {
            (from, 0.0)
        } else if x > x1 {
            (to, 0.0)
        } else {
            (cubic.eval(x), cubic.curvature(x))
        };
        pts.push((x, y));
        kappa.push(k);
    };
    let mut stations: Vec<f64> = (0..=n).map(|i| (x_start + i as f64 * ds).min(x_end)).collect();
    stations.extend([x0, x1]);
    stations.retain(|&x| x >= x_start && x <= x_end);
    stations.sort_by(f64::total_cmp);
    stations.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    for x in stations {
        push(x);
    }
    RefPath::new(pts, kappa)
}

pub const REFERENCE_SPACING: f64 = 0.5;

pub fn run_ttca(s: &Scenario) -> Result<TtcaRun> {
    s.validate()?;
    let obs = s.obstacle.as_ref().ok_or(Error::Invalid("the TTC-aware planner needs an obstacle"))?;
    let scene = s.scene()?;
    let spread: ObstacleSpread = scene.spread().expect("obstacle present");
    let frame = s.frame()?;
    let waypoints = descend_path(&scene, &s.descent)?;

    let pair = LongitudinalPair {
        v1: s.ego.speed,
        a1: s.ego.accel,
        v2: obs.speed,
        a2: obs.accel,
        d_rela: obs.x - s.ego.x,
        d_stop: s.ttc.d_stop,
    };
    let ttc = time_to_collision(&pair)?;
    if gate_lane_change(&ttc, s.ttc.threshold) == Gate::BrakeFirst {
        return Err(Error::BrakeFirst { ttc: ttc.seconds });
    }

    // In the co-moving frame the ego approaches at the closing speed; the
    // corridor must be reached while the TTC is still at the alert level.
    let closing = s.ego.speed - obs.speed;
    let band_ys = corridor(s)?;
    let window =
        compute_window(closing, obs.x, s.ttc.threshold, s.ttc.t_lc, spread.sigma_x, band_ys, s.fit.sample_spacing)?;
    let first = waypoints.points[0].0;
    let last = waypoints.points[waypoints.len() - 1].0;
    let x0 = (window.x_start - closing * s.ttc.t_lc).max(first);
    let x1 = (window.x_start + closing * s.ttc.threshold).min(last);
    if !(x0 < x1) {
        return Err(Error::EmptyWindow { x_start: x0, x_end: x1 });
    }

    if !s.fit.enabled {
        let path = RefPath::from_waypoints(&frame.path_to_road(&waypoints))?;
        let (log, metrics) = track(s, path.clone())?;
        return Ok(TtcaRun {
            run: PlanRun { waypoints, path, log, metrics },
            ttc,
            window,
            maneuver: (x0, x1),
            fit: None,
            cubic: None,
            fine_grid_violation: 0.0,
        });
    }

    let data = maneuver_waypoints(s, &waypoints, x0, x1)?;
    let (from, to) = (s.ego_lane_center()?, s.target_lane_center()?);
    let mut bounds = match window.clip(x0, x1) {
        Some(w) => build_constraints(&w),
        None => Vec::new(),
    };
    bounds.extend(band(x0, from, s.fit.endpoint_tolerance));
    bounds.extend(band(x1, to, s.fit.endpoint_tolerance));
    let report = fit_constrained(&data, &bounds)?;
    let fine_grid_violation = window.clip(x0, x1).map_or(0.0, |w| max_violation(&report.coeffs, &w, 10));

    let cubic = frame.cubic_to_road(&report.coeffs);
    let path = composite_path(
        from,
        to,
        &cubic,
        frame.to_road(x0),
        frame.to_road(x1),
        s.ego.x,
        frame.to_road(last),
        REFERENCE_SPACING,
    )?;
    let (log, metrics) = track(s, path.clone())?;
    Ok(TtcaRun {
        run: PlanRun { waypoints, path, log, metrics },
        ttc,
        window,
        maneuver: (x0, x1),
        fit: Some(report),
        cubic: Some(cubic),
        fine_grid_violation,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub cpf: PlanRun,
    pub ttca: TtcaRun,
    /// (cpf − ttca)/cpf per metric, in `LcMetrics::FIELDS` order; zero where
    /// the CPF value is zero.
    pub deltas: [f64; 9],
}

pub fn relative_reduction(cpf: &LcMetrics, ttca: &LcMetrics) -> [f64; 9] {
    let (a, b) = (cpf.values(), ttca.values());
    core::array::from_fn(|i| if a[i] == 0.0 || a[i] == b[i] { 0.0 } else { (a[i] - b[i]) / a[i] })
}

pub fn compare(s: &Scenario) -> Result<ComparisonReport> {
    let cpf = run_cpf(&s.clone())?;
    let ttca = run_ttca(&s.clone())?;
    let deltas = relative_reduction(&cpf.metrics, &ttca.run.metrics);
    Ok(ComparisonReport { cpf, ttca, deltas })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_roundtrip() {
        let f = Frame { origin: 10.0, stretch: 6.0 };
        assert_eq!(f.to_road(20.0), 70.0);
        assert_eq!(f.to_plan(70.0), 20.0);
        let c = CubicCoeffs::new(1.0, 0.1, -0.01, 0.001);
        let r = f.cubic_to_road(&c);
        assert!((r.eval(70.0) - c.eval(20.0)).abs() < 1e-12);
    }

    #[test]
    fn highway_lanes() {
        let s = Scenario::highway();
        s.validate().unwrap();
        assert_eq!(s.ego_lane_center().unwrap(), 6.0);
        assert_eq!(s.target_lane_center().unwrap(), 3.0);
        assert_eq!(corridor(&s).unwrap(), (2.4, 4.5));
        assert_eq!(s.frame().unwrap().stretch, 6.0);
    }

    #[test]
    fn gap_inside_alert_brakes() {
        let mut s = Scenario::highway();
        s.obstacle.as_mut().unwrap().x = 15.0;
        assert!(matches!(run_ttca(&s), Err(Error::BrakeFirst { .. })));
    }
}
