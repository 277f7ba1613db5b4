//! Dense dual active-set solver (Goldfarb–Idnani) for strictly convex QPs
//!
//! ```text
//!     minimize    ½ xᵀHx + cᵀx
//!     subject to  g_iᵀx ≤ b_i
//! ```
//!
//! in four unknowns. The iteration starts at the unconstrained minimum and
//! adds violated constraints one at a time, keeping multipliers nonnegative,
//! so no feasible starting point is needed. Each step re-solves the small
//! projected system instead of updating factorizations.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve, dot, lu_solve, mat_vec};

pub const N: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    /// Row-major N×N, symmetric positive definite.
    pub h: [f64; N * N],
    pub c: [f64; N],
    pub g: Vec<[f64; N]>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Kkt {
    /// ‖Hx + c + Σλ_i g_i‖∞
    pub stationarity: f64,
    /// 1 + ‖c‖∞ + ‖Hx‖∞, the scale the stationarity residual is judged against.
    pub gradient_scale: f64,
    /// max_i (g_iᵀx − b_i)⁺
    pub primal: f64,
    /// max_i |λ_i (b_i − g_iᵀx)|
    pub complementarity: f64,
    /// min(0, min_i λ_i)
    pub min_multiplier: f64,
}

impl Kkt {
    pub const STATIONARITY_TOL: f64 = 1e-8;
    pub const PRIMAL_TOL: f64 = 1e-9;
    pub const COMPLEMENTARITY_TOL: f64 = 1e-8;

    pub fn within_tolerance(&self) -> bool {
        self.stationarity <= Self::STATIONARITY_TOL * self.gradient_scale
            && self.primal <= Self::PRIMAL_TOL
            && self.complementarity <= Self::COMPLEMENTARITY_TOL
            && self.min_multiplier >= 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: [f64; N],
    /// One multiplier per constraint; zero for inactive ones.
    pub multipliers: Vec<f64>,
    pub active: Vec<usize>,
    pub iterations: usize,
    pub kkt: Kkt,
}

pub const DEFAULT_MAX_ITER: usize = 500;

pub fn kkt_residuals(p: &QpProblem, x: &[f64; N], lambda: &[f64]) -> Kkt {
    let hx = mat_vec(N, &p.h, x);
    let mut grad: Vec<f64> = hx.iter().zip(&p.c).map(|(a, b)| a + b).collect();
    for (gi, &l) in p.g.iter().zip(lambda) {
        for k in 0..N {
            grad[k] += l * gi[k];
        }
    }
    let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let mut primal = 0.0f64;
    let mut compl = 0.0f64;
    for ((gi, &bi), &l) in p.g.iter().zip(&p.b).zip(lambda) {
        let slack = bi - dot(gi, x);
        primal = primal.max(-slack);
        compl = compl.max((l * slack).abs());
    }
    Kkt {
        stationarity: inf(&grad),
        gradient_scale: 1.0 + inf(&p.c) + inf(&hx),
        primal,
        complementarity: compl,
        min_multiplier: lambda.iter().copied().fold(0.0, f64::min),
    }
}

pub fn solve(p: &QpProblem, max_iter: usize) -> Result<QpSolution> {
    if p.g.len() != p.b.len() {
        return Err(Error::Invalid("qp: one bound per constraint row"));
    }
    let l = cholesky(N, &p.h).ok_or(Error::DegenerateFit)?;
    let hinv_mul = |v: &[f64]| cholesky_solve(N, &l, v);

    let neg_c: Vec<f64> = p.c.iter().map(|v| -v).collect();
    let mut x: [f64; N] = to_arr(&hinv_mul(&neg_c));
    let m = p.g.len();
    let mut u = alloc::vec![0.0; m];
    let mut active: Vec<usize> = Vec::new();
    // n_i = −g_i so the working form is n_iᵀx ≥ −b_i, slack s_i = b_i − g_iᵀx.
    let slack = |x: &[f64; N], i: usize| p.b[i] - dot(&p.g[i], x);
    let tol = |i: usize| 1e-12 * (1.0 + p.b[i].abs() + p.g[i].iter().fold(0.0f64, |s, v| s.max(v.abs())));

    let mut iterations = 0;
    loop {
        let mut worst = None;
        let mut worst_s = 0.0;
        for i in 0..m {
            if active.contains(&i) {
                continue;
            }
            let s = slack(&x, i);
            if s < -tol(i) && s < worst_s {
                worst_s = s;
                worst = Some(i);
            }
        }
        let Some(q) = worst else { break };
        let nq: Vec<f64> = p.g[q].iter().map(|v| -v).collect();
        loop {
            iterations += 1;
            if iterations > max_iter {
                return Err(Error::SolverStall);
            }
            let k = active.len();
            let ncols: Vec<Vec<f64>> = active.iter().map(|&j| p.g[j].iter().map(|v| -v).collect()).collect();
            let hn: Vec<Vec<f64>> = ncols.iter().map(|c| hinv_mul(c)).collect();
            let hnq = hinv_mul(&nq);
            let r = if k == 0 {
                Vec::new()
            } else {
                let mut mm = alloc::vec![0.0; k * k];
                for i in 0..k {
                    for j in 0..k {
                        mm[i * k + j] = dot(&ncols[i], &hn[j]);
                    }
                }
                let rhs: Vec<f64> = ncols.iter().map(|c| dot(c, &hnq)).collect();
                lu_solve(k, &mm, &rhs, 1e-14).ok_or(Error::SolverStall)?
            };
            let mut z = hnq.clone();
            for (j, rj) in r.iter().enumerate() {
                for t in 0..N {
                    z[t] -= rj * hn[j][t];
                }
            }
            let mut t1 = f64::INFINITY;
            let mut drop = None;
            for (j, &rj) in r.iter().enumerate() {
                if rj > 1e-14 {
                    let ratio = u[active[j]] / rj;
                    if ratio < t1 {
                        t1 = ratio;
                        drop = Some(j);
                    }
                }
            }
            let curv = dot(&z, &nq);
            if curv <= 1e-12 * dot(&nq, &hnq) {
                // n_q lies in the span of the active normals: dual step only.
                let Some(j) = drop else { return Err(Error::Infeasible) };
                for (jj, &rj) in r.iter().enumerate() {
                    u[active[jj]] -= t1 * rj;
                }
                u[q] += t1;
                u[active[j]] = 0.0;
                active.remove(j);
                continue;
            }
            let t2 = -slack(&x, q) / curv;
            let t = t1.min(t2);
            for i in 0..N {
                x[i] += t * z[i];
            }
            for (jj, &rj) in r.iter().enumerate() {
                u[active[jj]] -= t * rj;
            }
            u[q] += t;
            if t2 <= t1 {
                active.push(q);
                break;
            }
            let j = drop.expect("finite t1 has a blocking index");
            u[active[j]] = 0.0;
            active.remove(j);
        }
    }
    for (i, ui) in u.iter_mut().enumerate() {
        if !active.contains(&i) || *ui < 0.0 {
            *ui = 0.0;
        }
    }
    let kkt = kkt_residuals(p, &x, &u);
    active.sort_unstable();
    Ok(QpSolution { x, multipliers: u, active, iterations, kkt })
}

fn to_arr(v: &[f64]) -> [f64; N] {
    let mut a = [0.0; N];
    a.copy_from_slice(&v[..N]);
    a
}
