//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::Rng;
use ttca_core::field::{GradientMode, Scene, WaypointSet};
use ttca_core::fit::{CubicCoeffs, PointBound, Side};
use ttca_core::plan::Scenario;
use ttca_core::ttc::{LongitudinalPair, Regime};

/// First time the gap shrinks to `d_stop`, found by stepping both vehicles
/// forward in `dt` increments (exact constant-acceleration motion within a
/// step, speeds clamped at zero) and interpolating inside the crossing step.
/// Regime is CaseOne when the leader is already at rest at contact.
pub fn ttc_by_integration(p: &LongitudinalPair, dt: f64, horizon: f64) -> Option<(f64, Regime)> {
    let (mut x1, mut v1, mut x2, mut v2) = (0.0f64, p.v1, p.d_rela, p.v2);
    let advance = |x: &mut f64, v: &mut f64, a: f64| {
        let stop = if a < 0.0 && *v > 0.0 { *v / -a } else if *v <= 0.0 && a <= 0.0 { 0.0 } else { f64::INFINITY };
        let h = dt.min(stop);
        *x += *v * h + 0.5 * a * h * h;
        *v = if h < dt { 0.0 } else { *v + a * h };
    };
    let mut t = 0.0;
    let mut gap = x2 - x1;
    while t < horizon {
        advance(&mut x1, &mut v1, p.a1);
        advance(&mut x2, &mut v2, p.a2);
        let g = x2 - x1;
        if g <= p.d_stop {
            let frac = (gap - p.d_stop) / (gap - g);
            let regime = if v2 == 0.0 { Regime::CaseOne } else { Regime::CaseTwo };
            return Some((t + frac * dt, regime));
        }
        gap = g;
        t += dt;
        // the leader never reverses, so a parked follower never closes
        if v1 == 0.0 && p.a1 <= 0.0 {
            return None;
        }
    }
    None
}

pub fn random_pair(rng: &mut StdRng) -> LongitudinalPair {
    let d_stop = rng.gen_range(0.0..10.0);
    LongitudinalPair {
        v1: rng.gen_range(0.0..40.0),
        a1: rng.gen_range(-4.0..3.0),
        v2: rng.gen_range(0.0..40.0),
        a2: rng.gen_range(-6.0..3.0),
        d_rela: d_stop + rng.gen_range(1.0..150.0),
        d_stop,
    }
}

/// Weighted cubic least squares under point bounds by enumerating every
/// candidate active set of up to four bounds in the plain monomial basis.
/// Returns the feasible KKT point with the smallest objective.
pub fn brute_force_fit(w: &WaypointSet, bounds: &[PointBound]) -> Option<CubicCoeffs> {
    let phi = |x: f64| [1.0, x, x * x, x * x * x];
    let mut h = DMatrix::<f64>::zeros(4, 4);
    let mut g = DVector::<f64>::zeros(4);
    for (&(x, y), &wt) in w.points.iter().zip(&w.weights) {
        let f = phi(x);
        for i in 0..4 {
            for j in 0..4 {
                h[(i, j)] += wt * f[i] * f[j];
            }
            g[i] += wt * y * f[i];
        }
    }
    // a_i · coeffs ≤ b_i
    let rows: Vec<([f64; 4], f64)> = bounds
        .iter()
        .map(|b| {
            let f = phi(b.x);
            match b.side {
                Side::Upper => (f, b.y),
                Side::Lower => (f.map(|v| -v), -b.y),
            }
        })
        .collect();
    let objective = |c: &DVector<f64>| 0.5 * c.dot(&(&h * c)) - g.dot(c);
    let scale = h.amax();
    let mut best: Option<(f64, DVector<f64>)> = None;
    let m = rows.len();
    let mut subset = Vec::new();
    enumerate(m, 4, 0, &mut subset, &mut |set: &[usize]| {
        let k = set.len();
        let mut kkt = DMatrix::<f64>::zeros(4 + k, 4 + k);
        let mut rhs = DVector::<f64>::zeros(4 + k);
        kkt.view_mut((0, 0), (4, 4)).copy_from(&h);
        rhs.rows_mut(0, 4).copy_from(&g);
        for (j, &i) in set.iter().enumerate() {
            for t in 0..4 {
                kkt[(t, 4 + j)] = rows[i].0[t];
                kkt[(4 + j, t)] = rows[i].0[t];
            }
            rhs[4 + j] = rows[i].1;
        }
        let Some(sol) = kkt.clone().lu().solve(&rhs) else { return };
        if (&kkt * &sol - &rhs).amax() > 1e-8 * (1.0 + rhs.amax()) * (1.0 + scale) {
            return;
        }
        let c = sol.rows(0, 4).into_owned();
        let lam = sol.rows(4, k);
        if lam.iter().any(|&l| l < -1e-9 * (1.0 + scale)) {
            return;
        }
        let feasible = rows.iter().all(|(a, b)| a.iter().zip(c.iter()).map(|(p, q)| p * q).sum::<f64>() <= b + 1e-9);
        if !feasible {
            return;
        }
        let f = objective(&c);
        if best.as_ref().map_or(true, |(bf, _)| f < *bf) {
            best = Some((f, c));
        }
    });
    best.map(|(_, c)| CubicCoeffs::new(c[0], c[1], c[2], c[3]))
}

fn enumerate(m: usize, max: usize, from: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    f(cur);
    if cur.len() == max {
        return;
    }
    for i in from..m {
        cur.push(i);
        enumerate(m, max, i + 1, cur, f);
        cur.pop();
    }
}

/// A feasible random instance: noisy samples of a random cubic on [0, 4],
/// plus up to `max_bounds` bounds that a second random cubic satisfies.
pub fn random_fit_instance(rng: &mut StdRng, max_bounds: usize) -> (WaypointSet, Vec<PointBound>) {
    let n = rng.gen_range(6..30);
    let truth = CubicCoeffs::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-1.0..1.0), rng.gen_range(-0.3..0.3));
    let mut points: Vec<(f64, f64)> = (0..n).map(|i| 4.0 * i as f64 / (n - 1) as f64).map(|x| (x, truth.eval(x) + rng.gen_range(-0.5..0.5))).collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let weights = (0..n).map(|_| rng.gen_range(0.2..5.0)).collect();
    let witness = CubicCoeffs::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-0.5..0.5), rng.gen_range(-0.1..0.1));
    let k = rng.gen_range(1..=max_bounds);
    let bounds = (0..k)
        .map(|_| {
            let x = rng.gen_range(0.0..4.0);
            let margin = rng.gen_range(0.0..0.3);
            if rng.gen_bool(0.5) {
                PointBound { x, y: witness.eval(x) + margin, side: Side::Upper }
            } else {
                PointBound { x, y: witness.eval(x) - margin, side: Side::Lower }
            }
        })
        .collect();
    (WaypointSet { points, weights }, bounds)
}

/// Largest relative gap between the analytic gradient and a central
/// difference with step `h`, over random probes inside the walls.
pub fn worst_gradient_error(scene: &Scene, rng: &mut StdRng, probes: usize, h: f64) -> f64 {
    let s = Scenario::highway();
    let (lo, hi) = (s.road.edge_lower_y + 0.5 * s.ego.params.width, s.road.edge_upper_y - 0.5 * s.ego.params.width);
    let mut worst = 0.0f64;
    for _ in 0..probes {
        let x = rng.gen_range(-50.0..400.0);
        let y = rng.gen_range(lo + 0.1..hi - 0.1);
        let (ax, ay) = scene.gradient(x, y, GradientMode::Analytic).unwrap();
        let (nx, ny) = richardson(scene, x, y, h);
        let err = ((ax - nx).powi(2) + (ay - ny).powi(2)).sqrt();
        let norm = (ax * ax + ay * ay).sqrt().max(1e-6);
        worst = worst.max(err / norm);
    }
    worst
}

/// Central differences at h and h/2 combined to cancel the O(h²) term.
pub fn richardson(scene: &Scene, x: f64, y: f64, h: f64) -> (f64, f64) {
    let a = scene.numeric_gradient(x, y, h).unwrap();
    let b = scene.numeric_gradient(x, y, 0.5 * h).unwrap();
    ((4.0 * b.0 - a.0) / 3.0, (4.0 * b.1 - a.1) / 3.0)
}

pub fn highway_scene() -> Scene {
    let s = Scenario::highway();
    Scene::new(s.road, s.ego, s.obstacle, s.field).unwrap()
}
