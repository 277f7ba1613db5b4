//! JSON scenario files.
//!
//! Every section is optional except `road` and `ego`; absent keys take the
//! defaults of [`Scenario::new`]. Speeds are numbers in m/s or strings with a
//! unit, e.g. `"108 km/h"` or `"30 m/s"`. Unknown keys are rejected.

use std::path::Path;

use serde::de::{self, Deserializer};
use serde::Deserialize;
use ttca_core::field::{EgoState, ObstacleState, RoadGeometry, VehicleParams};
use ttca_core::plan::Scenario;

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("parse error at line {line}, column {column}, key `{key}`: {message}")]
    Parse { line: usize, column: usize, key: String, message: String },
    #[error("invalid scenario: {0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

pub fn kmh_to_ms(v: f64) -> f64 {
    v / 3.6
}

pub fn ms_to_kmh(v: f64) -> f64 {
    v * 3.6
}

/// Parse `"108 km/h"`, `"30 m/s"` or a bare number (m/s) into m/s.
pub fn parse_speed(text: &str) -> Result<f64, String> {
    let t = text.trim();
    let split = t.find(|c: char| c.is_alphabetic()).unwrap_or(t.len());
    let (num, unit) = t.split_at(split);
    let v: f64 = num.trim().parse().map_err(|_| format!("bad speed `{text}`"))?;
    match unit.trim().to_ascii_lowercase().as_str() {
        "" | "m/s" | "mps" => Ok(v),
        "km/h" | "kmh" | "kph" => Ok(kmh_to_ms(v)),
        u => Err(format!("unknown speed unit `{u}` (use m/s or km/h)")),
    }
}

#[derive(Debug, Clone, Copy)]
struct Speed(f64);

impl<'de> Deserialize<'de> for Speed {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Speed(v)),
            Raw::Text(s) => parse_speed(&s).map(Speed).map_err(de::Error::custom),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct File {
    road: Option<RoadSpec>,
    ego: Option<EgoSpec>,
    obstacle: Option<ObstacleSpec>,
    #[serde(default)]
    field: FieldSpec,
    #[serde(default)]
    descent: DescentSpec,
    #[serde(default)]
    ttc: TtcSpec,
    #[serde(default)]
    fit: FitSpec,
    #[serde(default)]
    sim: SimSpec,
    target_lane: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RoadSpec {
    edge_lower_y: f64,
    lane_width: f64,
    lanes: Option<usize>,
    edge_upper_y: Option<f64>,
    lane_divider_ys: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct VehicleSpec {
    mass: Option<f64>,
    max_brake_decel: Option<f64>,
    wheelbase: Option<f64>,
    width: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EgoSpec {
    x: f64,
    y: f64,
    speed: Speed,
    #[serde(default)]
    accel: f64,
    #[serde(default)]
    vehicle: VehicleSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObstacleSpec {
    x: f64,
    y: f64,
    speed: Speed,
    #[serde(default)]
    accel: f64,
    /// degrees
    #[serde(default)]
    heading_deg: f64,
    #[serde(default)]
    vehicle: VehicleSpec,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldSpec {
    lambda: Option<f64>,
    xi: Option<f64>,
    a_lane: Option<f64>,
    sigma_lane: Option<f64>,
    a_obs: Option<f64>,
    u_min: Option<f64>,
    x_target: Option<f64>,
    lateral_ref_offset: Option<f64>,
    pass_bias: Option<f64>,
    mass_unit: Option<f64>,
    edge_eps: Option<f64>,
    strict_dmin: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DescentSpec {
    step_len: Option<f64>,
    max_steps: Option<usize>,
    forward_floor: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TtcSpec {
    threshold: Option<f64>,
    d_stop: Option<f64>,
    t_lc: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FitSpec {
    enabled: Option<bool>,
    sample_spacing: Option<f64>,
    anchor_fraction: Option<f64>,
    anchor_weight: Option<f64>,
    endpoint_tolerance: Option<f64>,
    corridor_offset: Option<f64>,
    /// [y_lower, y_upper]
    corridor: Option<[f64; 2]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimSpec {
    dt: Option<f64>,
    mass: Option<f64>,
    yaw_inertia: Option<f64>,
    dist_cg_front: Option<f64>,
    dist_cg_rear: Option<f64>,
    cornering_stiff_front: Option<f64>,
    cornering_stiff_rear: Option<f64>,
    lookahead_gain: Option<f64>,
    controller_period: Option<f64>,
    max_cross_track: Option<f64>,
}

fn set<T: Copy>(dst: &mut T, src: Option<T>) {
    if let Some(v) = src {
        *dst = v;
    }
}

fn vehicle(spec: &VehicleSpec) -> VehicleParams {
    let mut v = VehicleParams::default();
    set(&mut v.mass, spec.mass);
    set(&mut v.max_brake_decel, spec.max_brake_decel);
    set(&mut v.wheelbase, spec.wheelbase);
    set(&mut v.width, spec.width);
    v
}

fn parse(text: &str) -> Result<File, LoadError> {
    if text.trim().is_empty() {
        return Ok(File::default());
    }
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        let inner = e.into_inner();
        let full = inner.to_string();
        let message = match full.rfind(" at line ") {
            Some(i) => full[..i].to_string(),
            None => full,
        };
        LoadError::Parse { line: inner.line(), column: inner.column(), key, message }
    })
}

pub fn load_scenario(text: &str) -> Result<Scenario, LoadError> {
    let f = parse(text)?;
    let invalid = |e: ttca_core::Error| LoadError::Validation(e.to_string());
    let r = f.road.ok_or_else(|| LoadError::Validation("road missing".into()))?;
    let e = f.ego.ok_or_else(|| LoadError::Validation("ego missing".into()))?;
    let mut road = RoadGeometry::uniform(r.edge_lower_y, r.lane_width, r.lanes.unwrap_or(2));
    if let Some(u) = r.edge_upper_y {
        road.edge_upper_y = u;
    }
    if let Some(d) = r.lane_divider_ys {
        road.lane_divider_ys = d;
    }
    let ego = EgoState { x: e.x, y: e.y, speed: e.speed.0, accel: e.accel, params: vehicle(&e.vehicle) };
    let obstacle = f.obstacle.map(|o| ObstacleState {
        x: o.x,
        y: o.y,
        speed: o.speed.0,
        accel: o.accel,
        heading: o.heading_deg.to_radians(),
        params: vehicle(&o.vehicle),
    });
    road.validate().map_err(invalid)?;
    if !road.contains(ego.y) || road.lane_index(ego.y).is_none() {
        return Err(LoadError::Validation("ego must start inside a lane".into()));
    }
    if let Some(o) = &obstacle {
        if !road.contains(o.y) {
            return Err(LoadError::Validation("obstacle lies outside the road edges".into()));
        }
    }
    let mut s = Scenario::new(road, ego, obstacle).map_err(invalid)?;
    s.target_lane = f.target_lane;

    let (fs, fc) = (&f.field, &mut s.field);
    set(&mut fc.lambda, fs.lambda);
    set(&mut fc.a_lane, fs.a_lane);
    set(&mut fc.sigma_lane, fs.sigma_lane);
    set(&mut fc.a_obs, fs.a_obs);
    set(&mut fc.u_min, fs.u_min);
    set(&mut fc.x_target, fs.x_target);
    set(&mut fc.lateral_ref_offset, fs.lateral_ref_offset);
    set(&mut fc.pass_bias, fs.pass_bias);
    set(&mut fc.mass_unit, fs.mass_unit);
    set(&mut fc.edge_eps, fs.edge_eps);
    set(&mut fc.strict_dmin, fs.strict_dmin);
    match fs.xi {
        Some(xi) => s.field.xi = xi,
        None => s.rebalance_xi().map_err(invalid)?,
    }

    set(&mut s.descent.step_len, f.descent.step_len);
    set(&mut s.descent.max_steps, f.descent.max_steps);
    set(&mut s.descent.forward_floor, f.descent.forward_floor);

    set(&mut s.ttc.threshold, f.ttc.threshold);
    set(&mut s.ttc.d_stop, f.ttc.d_stop);
    set(&mut s.ttc.t_lc, f.ttc.t_lc);

    set(&mut s.fit.enabled, f.fit.enabled);
    set(&mut s.fit.sample_spacing, f.fit.sample_spacing);
    set(&mut s.fit.anchor_fraction, f.fit.anchor_fraction);
    set(&mut s.fit.anchor_weight, f.fit.anchor_weight);
    set(&mut s.fit.endpoint_tolerance, f.fit.endpoint_tolerance);
    if f.fit.corridor_offset.is_some() {
        s.fit.corridor_offset = f.fit.corridor_offset;
    }
    if let Some([lo, hi]) = f.fit.corridor {
        s.fit.corridor = Some((lo, hi));
    }

    let (ss, b) = (&f.sim, &mut s.sim.bicycle);
    set(&mut s.sim.dt, ss.dt);
    set(&mut b.mass, ss.mass);
    set(&mut b.yaw_inertia, ss.yaw_inertia);
    set(&mut b.dist_cg_front, ss.dist_cg_front);
    set(&mut b.dist_cg_rear, ss.dist_cg_rear);
    set(&mut b.cornering_stiff_front, ss.cornering_stiff_front);
    set(&mut b.cornering_stiff_rear, ss.cornering_stiff_rear);
    set(&mut s.sim.controller.lookahead_gain, ss.lookahead_gain);
    set(&mut s.sim.controller.period, ss.controller_period);
    set(&mut s.sim.controller.max_cross_track, ss.max_cross_track);

    s.validate().map_err(invalid)?;
    Ok(s)
}

pub fn load_scenario_file(path: &Path) -> Result<Scenario, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io { path: path.display().to_string(), source })?;
    load_scenario(&text)
}
