//! Time to collision for a follower closing on a leader under constant
//! accelerations, with vehicles that stop rather than reverse.

use crate::error::{Error, Result};

/// Rear (follower, index 1) and front (leader, index 2) longitudinal state.
///
/// `d_rela` is measured c.g. to c.g.; vehicle half-lengths belong in `d_stop`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LongitudinalPair {
    pub v1: f64,
    pub a1: f64,
    pub v2: f64,
    pub a2: f64,
    pub d_rela: f64,
    pub d_stop: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Contact happens after the leader has come to rest.
    CaseOne,
    /// Contact happens while the leader is still moving.
    CaseTwo,
    NoApproach,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TtcResult {
    /// `f64::INFINITY` when there is no approach.
    pub seconds: f64,
    pub regime: Regime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Proceed,
    BrakeFirst,
}

pub const DEFAULT_THRESHOLD: f64 = 2.7;
pub const DEFAULT_D_STOP: f64 = 5.0;

impl LongitudinalPair {
    pub fn validate(&self) -> Result<()> {
        let all = [self.v1, self.a1, self.v2, self.a2, self.d_rela, self.d_stop];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("non-finite longitudinal state"));
        }
        if self.v1 < 0.0 || self.v2 < 0.0 {
            return Err(Error::Invalid("speeds must be nonnegative"));
        }
        if self.d_stop < 0.0 {
            return Err(Error::Invalid("d_stop must be nonnegative"));
        }
        if self.d_rela <= self.d_stop {
            return Err(Error::Invalid("gap must exceed d_stop"));
        }
        Ok(())
    }

    /// Time at which the leader comes to rest; zero if already stopped.
    fn leader_stop_time(&self) -> f64 {
        if self.v2 == 0.0 && self.a2 <= 0.0 {
            0.0
        } else if self.a2 < 0.0 {
            self.v2 / -self.a2
        } else {
            f64::INFINITY
        }
    }

    fn follower_stop_time(&self) -> f64 {
        if self.a1 < 0.0 {
            self.v1 / -self.a1
        } else {
            f64::INFINITY
        }
    }

    /// Distance the leader still covers before stopping, v2²/(2|a2|).
    fn leader_stopping_distance(&self) -> f64 {
        if self.v2 == 0.0 {
            0.0
        } else {
            self.v2 * self.v2 / (2.0 * -self.a2)
        }
    }
}

/// Smallest positive t with v·t + ½·a·t² = d (d > 0), if it exists.
///
/// Written as 2d / (v + √(v² + 2ad)), which equals (−v + √(v² + 2ad)) / a
/// but stays accurate as a → 0.
fn first_reach(v: f64, a: f64, d: f64) -> Option<f64> {
    let disc = v * v + 2.0 * a * d;
    if disc < 0.0 {
        return None;
    }
    let den = v + libm::sqrt(disc);
    if den <= 0.0 {
        return None;
    }
    Some(2.0 * d / den)
}

pub fn classify_regime(pair: &LongitudinalPair) -> Regime {
    classify_with_time(pair).1
}

fn classify_with_time(p: &LongitudinalPair) -> (f64, Regime) {
    let t2 = p.leader_stop_time();
    if t2 > 0.0 {
        let closing = first_reach(p.v1 - p.v2, p.a1 - p.a2, p.d_rela - p.d_stop);
        if let Some(t) = closing {
            if t < t2 && t <= p.follower_stop_time() {
                return (t, Regime::CaseTwo);
            }
        }
    }
    if t2.is_finite() {
        if let Ok(t) = ttc_case1(p) {
            return (t, Regime::CaseOne);
        }
    }
    (f64::INFINITY, Regime::NoApproach)
}

/// Leader at rest: the follower must cover d_rela − d_stop + v2²/(2|a2|).
///
/// For a1 > 0 this is (−v1 + √(v1² + 2a1·D)) / |a1|; dividing by the signed
/// a1 instead keeps the braking-follower root physical.
pub fn ttc_case1(p: &LongitudinalPair) -> Result<f64> {
    let d = p.d_rela - p.d_stop + p.leader_stopping_distance();
    if p.a1 == 0.0 {
        if p.v1 == 0.0 {
            return Err(Error::Invalid("follower at rest never closes"));
        }
        return Ok(d / p.v1);
    }
    first_reach(p.v1, p.a1, d).ok_or(Error::Invalid("follower stops before the gap closes"))
}

/// Both vehicles moving: closing speed v1 − v2 and closing accel a1 − a2.
pub fn ttc_case2(p: &LongitudinalPair) -> Result<f64> {
    let v = p.v1 - p.v2;
    let a = p.a1 - p.a2;
    let d = p.d_rela - p.d_stop;
    if a == 0.0 {
        if v <= 0.0 {
            return Err(Error::Invalid("no relative motion"));
        }
        return Ok(d / v);
    }
    first_reach(v, a, d).ok_or(Error::Invalid("gap never closes"))
}

pub fn time_to_collision(pair: &LongitudinalPair) -> Result<TtcResult> {
    pair.validate()?;
    let (seconds, regime) = classify_with_time(pair);
    Ok(TtcResult { seconds, regime })
}

/// Strict comparison: a TTC equal to the threshold proceeds.
pub fn gate_lane_change(ttc: &TtcResult, threshold: f64) -> Gate {
    if ttc.seconds.is_finite() && ttc.seconds < threshold {
        Gate::BrakeFirst
    } else {
        Gate::Proceed
    }
}
