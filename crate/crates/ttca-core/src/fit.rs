//! Weighted least-squares cubic fit to waypoints, optionally held inside a
//! lateral corridor sampled along a longitudinal window.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::WaypointSet;
use crate::qp::{self, Kkt, QpProblem};

/// y(x) = a0 + a1·x + a2·x² + a3·x³
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CubicCoeffs {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

impl CubicCoeffs {
    pub fn new(a0: f64, a1: f64, a2: f64, a3: f64) -> Self {
        CubicCoeffs { a0, a1, a2, a3 }
    }

    pub fn eval(&self, x: f64) -> f64 {
        ((self.a3 * x + self.a2) * x + self.a1) * x + self.a0
    }

    pub fn slope(&self, x: f64) -> f64 {
        (3.0 * self.a3 * x + 2.0 * self.a2) * x + self.a1
    }

    pub fn second(&self, x: f64) -> f64 {
        6.0 * self.a3 * x + 2.0 * self.a2
    }

    pub fn heading(&self, x: f64) -> f64 {
        libm::atan(self.slope(x))
    }

    /// Signed curvature f″/(1 + f′²)^{3/2}.
    pub fn curvature(&self, x: f64) -> f64 {
        let d = self.slope(x);
        let q = 1.0 + d * d;
        self.second(x) / (q * libm::sqrt(q))
    }

    /// g(x) = f(p + q·x) expanded into monomials.
    pub fn compose_affine(&self, p: f64, q: f64) -> Self {
        let (a0, a1, a2, a3) = (self.a0, self.a1, self.a2, self.a3);
        CubicCoeffs {
            a0: a0 + a1 * p + a2 * p * p + a3 * p * p * p,
            a1: q * (a1 + 2.0 * a2 * p + 3.0 * a3 * p * p),
            a2: q * q * (a2 + 3.0 * a3 * p),
            a3: q * q * q * a3,
        }
    }

    fn is_finite(&self) -> bool {
        [self.a0, self.a1, self.a2, self.a3].iter().all(|v| v.is_finite())
    }
}

pub fn eval_cubic(c: &CubicCoeffs, x: f64) -> f64 {
    c.eval(x)
}

pub fn heading(c: &CubicCoeffs, x: f64) -> f64 {
    c.heading(x)
}

pub fn curvature(c: &CubicCoeffs, x: f64) -> f64 {
    c.curvature(x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintWindow {
    pub x_start: f64,
    pub x_end: f64,
    pub y_upper: f64,
    pub y_lower: f64,
    pub sample_spacing: f64,
}

pub const DEFAULT_SAMPLE_SPACING: f64 = 0.5;
pub const DEFAULT_T_LC: f64 = 3.5;

/// x_start = x_obs − v·(ttc + t_lc), x_end = x_obs + σx.
pub fn compute_window(
    speed: f64,
    x_obs: f64,
    ttc: f64,
    t_lc: f64,
    sigma_x: f64,
    corridor: (f64, f64),
    sample_spacing: f64,
) -> Result<ConstraintWindow> {
    if !(t_lc > 0.0) || !(sample_spacing > 0.0) {
        return Err(Error::Invalid("window: t_lc and sample_spacing must be positive"));
    }
    let x_start = x_obs - speed * (ttc + t_lc);
    let x_end = x_obs + sigma_x;
    if !(x_start < x_end) {
        return Err(Error::EmptyWindow { x_start, x_end });
    }
    Ok(ConstraintWindow { x_start, x_end, y_lower: corridor.0, y_upper: corridor.1, sample_spacing })
}

impl ConstraintWindow {
    /// Restrict the window to [lo, hi]. The result may have zero length; it is
    /// `None` when the window and the interval do not overlap.
    pub fn clip(&self, lo: f64, hi: f64) -> Option<Self> {
        let x_start = self.x_start.max(lo);
        let x_end = self.x_end.min(hi);
        (x_start <= x_end).then_some(ConstraintWindow { x_start, x_end, ..*self })
    }

    pub fn samples(&self) -> Vec<f64> {
        let mut xs = Vec::new();
        let mut i = 0usize;
        loop {
            let x = self.x_start + i as f64 * self.sample_spacing;
            if x >= self.x_end - 1e-9 * self.sample_spacing {
                break;
            }
            xs.push(x);
            i += 1;
        }
        xs.push(self.x_end);
        xs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// y(x) ≤ y
    Upper,
    /// y(x) ≥ y
    Lower,
}

/// One linear inequality on the coefficients: the cubic's value at `x` is
/// bounded by `y` from the given side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointBound {
    pub x: f64,
    pub y: f64,
    pub side: Side,
}

impl PointBound {
    pub fn slack(&self, c: &CubicCoeffs) -> f64 {
        match self.side {
            Side::Upper => self.y - c.eval(self.x),
            Side::Lower => c.eval(self.x) - self.y,
        }
    }
}

/// Upper and lower corridor bounds at every sample of the window.
pub fn build_constraints(window: &ConstraintWindow) -> Vec<PointBound> {
    window
        .samples()
        .into_iter()
        .flat_map(|x| {
            [
                PointBound { x, y: window.y_upper, side: Side::Upper },
                PointBound { x, y: window.y_lower, side: Side::Lower },
            ]
        })
        .collect()
}

/// Largest corridor violation on a grid `refine` times finer than the window's.
pub fn max_violation(c: &CubicCoeffs, window: &ConstraintWindow, refine: usize) -> f64 {
    let fine = ConstraintWindow { sample_spacing: window.sample_spacing / refine.max(1) as f64, ..*window };
    fine.samples()
        .into_iter()
        .map(|x| {
            let y = c.eval(x);
            (y - window.y_upper).max(window.y_lower - y).max(0.0)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub coeffs: CubicCoeffs,
    /// Σ w_i (y_i − f(x_i))²
    pub residual: f64,
    pub active_constraints: usize,
    /// Worst KKT residual relative to its tolerance; ≤ 1 means certified.
    pub kkt_residual: f64,
    /// KKT residuals of the internal problem, posed in the centred and
    /// scaled abscissa s = (x − centre) / half_span.
    pub kkt: Kkt,
    pub multipliers: Vec<f64>,
}

/// Centre and half span of the waypoint abscissae.
struct Scaling {
    centre: f64,
    half: f64,
}

impl Scaling {
    fn of(wps: &WaypointSet) -> Self {
        let lo = wps.points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let hi = wps.points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        let half = 0.5 * (hi - lo);
        Scaling { centre: 0.5 * (lo + hi), half: if half > 0.0 { half } else { 1.0 } }
    }

    fn basis(&self, x: f64) -> [f64; 4] {
        let s = (x - self.centre) / self.half;
        [1.0, s, s * s, s * s * s]
    }

    /// Expand Σ b_k ((x − m)/h)^k into monomials of x.
    fn to_raw(&self, b: &[f64; 4]) -> CubicCoeffs {
        let m = self.centre;
        let c: [f64; 4] = [b[0], b[1] / self.half, b[2] / (self.half * self.half), b[3] / (self.half * self.half * self.half)];
        CubicCoeffs {
            a0: c[0] - c[1] * m + c[2] * m * m - c[3] * m * m * m,
            a1: c[1] - 2.0 * c[2] * m + 3.0 * c[3] * m * m,
            a2: c[2] - 3.0 * c[3] * m,
            a3: c[3],
        }
    }
}

fn check_waypoints(wps: &WaypointSet) -> Result<()> {
    if wps.points.len() != wps.weights.len() || !wps.weights.iter().all(|w| w.is_finite() && *w > 0.0) {
        return Err(Error::Invalid("waypoints: one positive weight per point"));
    }
    let mut xs: Vec<f64> = wps.points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 4 {
        return Err(Error::DegenerateFit);
    }
    Ok(())
}

fn normal_problem(wps: &WaypointSet, sc: &Scaling) -> QpProblem {
    let mut h = [0.0; 16];
    let mut c = [0.0; 4];
    for (&(x, y), &w) in wps.points.iter().zip(&wps.weights) {
        let phi = sc.basis(x);
        for i in 0..4 {
            for j in 0..4 {
                h[i * 4 + j] += w * phi[i] * phi[j];
            }
            c[i] -= w * y * phi[i];
        }
    }
    QpProblem { h, c, g: Vec::new(), b: Vec::new() }
}

fn weighted_residual(wps: &WaypointSet, c: &CubicCoeffs) -> f64 {
    wps.points.iter().zip(&wps.weights).map(|(&(x, y), &w)| w * (y - c.eval(x)) * (y - c.eval(x))).sum()
}

fn report(wps: &WaypointSet, sc: &Scaling, sol: qp::QpSolution) -> Result<FitReport> {
    let coeffs = sc.to_raw(&sol.x);
    if !coeffs.is_finite() {
        return Err(Error::DegenerateFit);
    }
    let k = &sol.kkt;
    let kkt_residual = (k.stationarity / (Kkt::STATIONARITY_TOL * k.gradient_scale))
        .max(k.primal / Kkt::PRIMAL_TOL)
        .max(k.complementarity / Kkt::COMPLEMENTARITY_TOL);
    Ok(FitReport {
        coeffs,
        residual: weighted_residual(wps, &coeffs),
        active_constraints: sol.active.len(),
        kkt_residual,
        kkt: sol.kkt,
        multipliers: sol.multipliers,
    })
}

pub fn fit_unconstrained(wps: &WaypointSet) -> Result<FitReport> {
    fit_constrained(wps, &[])
}

pub fn fit_constrained(wps: &WaypointSet, bounds: &[PointBound]) -> Result<FitReport> {
    check_waypoints(wps)?;
    if bounds.iter().any(|b| !(b.x.is_finite() && b.y.is_finite())) {
        return Err(Error::Invalid("constraint: non-finite bound"));
    }
    let sc = Scaling::of(wps);
    let mut p = normal_problem(wps, &sc);
    for bd in bounds {
        let phi = sc.basis(bd.x);
        match bd.side {
            Side::Upper => {
                p.g.push(phi);
                p.b.push(bd.y);
            }
            Side::Lower => {
                p.g.push(phi.map(|v| -v));
                p.b.push(-bd.y);
            }
        }
    }
    let sol = qp::solve(&p, qp::DEFAULT_MAX_ITER)?;
    report(wps, &sc, sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(points: &[(f64, f64)]) -> WaypointSet {
        WaypointSet::with_unit_weights(points.to_vec())
    }

    #[test]
    fn interpolates_a_cubic() {
        let w = set(&[(0.0, 0.0), (1.0, 1.0), (2.0, 8.0), (3.0, 27.0)]);
        let r = fit_unconstrained(&w).unwrap();
        let c = r.coeffs;
        for (got, want) in [c.a0, c.a1, c.a2, c.a3].iter().zip([0.0, 0.0, 0.0, 1.0]) {
            assert!((got - want).abs() < 1e-10, "{c:?}");
        }
        assert!(r.residual < 1e-20);
        assert_eq!(r.active_constraints, 0);
    }

    #[test]
    fn recovers_a_line() {
        let w = set(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0), (3.0, 7.0), (4.0, 9.0)]);
        let c = fit_unconstrained(&w).unwrap().coeffs;
        for (got, want) in [c.a0, c.a1, c.a2, c.a3].iter().zip([1.0, 2.0, 0.0, 0.0]) {
            assert!((got - want).abs() < 1e-10, "{c:?}");
        }
    }

    #[test]
    fn too_few_abscissae() {
        let w = set(&[(0.0, 1.0), (1.0, 3.0), (1.0, 5.0), (2.0, 7.0)]);
        assert_eq!(fit_unconstrained(&w), Err(Error::DegenerateFit));
    }

    #[test]
    fn window_substitution() {
        let w = compute_window(30.0, 120.0, 2.7, 3.5, 10.0, (0.0, 1.0), 0.5).unwrap();
        assert!((w.x_start - -66.0).abs() < 1e-12);
        let w = compute_window(30.0, 300.0, 2.7, 1.0, 40.0, (0.0, 1.0), 0.5).unwrap();
        assert!((w.x_start - 189.0).abs() < 1e-9 && w.x_end == 340.0);
        assert!(matches!(
            compute_window(30.0, 0.0, 2.7, 3.5, -200.0, (0.0, 1.0), 0.5),
            Err(Error::EmptyWindow { .. })
        ));
    }

    #[test]
    fn constraint_counts() {
        let w = ConstraintWindow { x_start: 0.0, x_end: 10.0, y_upper: 1.0, y_lower: 0.0, sample_spacing: 0.5 };
        assert_eq!(build_constraints(&w).len(), 42);
        let z = w.clip(4.0, 4.0).unwrap();
        assert_eq!(build_constraints(&z).len(), 2);
        assert!(w.clip(11.0, 12.0).is_none());
    }

    #[test]
    fn line_geometry() {
        let c = CubicCoeffs::new(0.0, 0.1, 0.0, 0.0);
        assert_eq!(c.heading(5.0), libm::atan(0.1));
        assert_eq!(c.curvature(5.0), 0.0);
        assert_eq!(CubicCoeffs::new(0.0, 0.0, 1.0, 0.0).curvature(0.0), 2.0);
    }

    #[test]
    fn affine_composition() {
        let c = CubicCoeffs::new(1.0, -0.5, 0.25, 0.01);
        let g = c.compose_affine(2.0, 1.0 / 6.0);
        for x in [-3.0, 0.0, 18.0, 40.0] {
            assert!((g.eval(x) - c.eval(2.0 + x / 6.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn single_upper_bound_is_active() {
        let pts: Vec<(f64, f64)> = (0..20).map(|i| (i as f64 * 0.5, libm::sin(i as f64 * 0.3))).collect();
        let w = set(&pts);
        let free = fit_unconstrained(&w).unwrap();
        let x = 4.0;
        let cap = free.coeffs.eval(x) - 0.2;
        let r = fit_constrained(&w, &[PointBound { x, y: cap, side: Side::Upper }]).unwrap();
        assert!((r.coeffs.eval(x) - cap).abs() < 1e-9);
        assert_eq!(r.active_constraints, 1);
        assert!(r.residual >= free.residual);
        assert!(r.kkt_residual <= 1.0);
    }
}
