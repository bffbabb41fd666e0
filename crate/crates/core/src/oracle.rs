//! Finite-difference reference solvers, independent of the kernel machinery.
//!
//! The memory term `b ∫ e^{-β(t-τ)} u dτ` is carried by `w` with
//! `w_t = -β w + u`, `w(0) = 0`, so the problem becomes the local system
//! `u_t = ε u_xx - a u - b w + F`. Second-order central differences in space,
//! classical RK4 in time.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent f64 methods win when std is linked
use num_traits::Float;

use crate::convolve::{Field, Grid, TimeSlab};
use crate::fhn::{cubic_f, FHNParams};
use crate::model::ModelParams;
use crate::{Error, Result};

/// Explicit-step safety factor relative to `dx²/(2ε)`.
pub const STABILITY_SAFETY: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Boundary values held at their initial values.
    DirichletFarField,
    /// Zero normal derivative (mirror ghost nodes).
    NeumannZero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FDConfig {
    pub grid: Grid,
    /// Inner time step.
    pub dt: f64,
    /// Horizon `T`.
    pub t_end: f64,
    pub bc: Boundary,
    /// Number of stored intervals; levels are `k T / n_out`.
    pub n_out: usize,
}

impl FDConfig {
    /// Step `0.4 dx²/(2ε)`.
    pub fn new(grid: Grid, t_end: f64, eps: f64, n_out: usize) -> Self {
        Self {
            grid,
            dt: STABILITY_SAFETY * grid.dx * grid.dx / (2.0 * eps),
            t_end,
            bc: Boundary::DirichletFarField,
            n_out,
        }
    }

    fn validate(&self, eps: f64) -> Result<()> {
        let limit = self.grid.dx * self.grid.dx / (2.0 * eps);
        if !(self.dt > 0.0) || self.dt > limit {
            return Err(Error::Config(alloc::format!(
                "time step {} exceeds the explicit stability limit dx²/(2ε) = {limit}",
                self.dt
            )));
        }
        if !(self.t_end > 0.0) || self.n_out == 0 {
            return Err(Error::Config("horizon and output count must be positive".into()));
        }
        Ok(())
    }
}

/// Stored levels of `u` and the auxiliary memory variable `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct FdSolution {
    pub u: TimeSlab,
    pub w: TimeSlab,
}

/// Second difference with the boundary rule; Dirichlet ends get zero.
fn laplacian(u: &[f64], dx: f64, bc: Boundary, out: &mut [f64]) {
    let n = u.len();
    let inv = 1.0 / (dx * dx);
    for i in 1..n - 1 {
        out[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv;
    }
    match bc {
        Boundary::DirichletFarField => {
            out[0] = 0.0;
            out[n - 1] = 0.0;
        }
        Boundary::NeumannZero => {
            out[0] = 2.0 * (u[1] - u[0]) * inv;
            out[n - 1] = 2.0 * (u[n - 2] - u[n - 1]) * inv;
        }
    }
}

/// RK4 for a pair of grid vectors with right-hand side `rhs(t, y1, y2, d1, d2)`,
/// storing `n_out + 1` levels.
fn integrate_pair(
    cfg: &FDConfig,
    y1: Vec<f64>,
    y2: Vec<f64>,
    mut rhs: impl FnMut(f64, &[f64], &[f64], &mut [f64], &mut [f64]),
) -> Result<(TimeSlab, TimeSlab)> {
    let grid = cfg.grid;
    let n = grid.n;
    let out_dt = cfg.t_end / cfg.n_out as f64;
    let sub = ((out_dt / cfg.dt).ceil() as usize).max(1);
    let h = out_dt / sub as f64;
    let (mut a, mut b) = (y1, y2);
    let mut s1 = vec![Field {
        grid,
        t: 0.0,
        values: a.clone(),
    }];
    let mut s2 = vec![Field {
        grid,
        t: 0.0,
        values: b.clone(),
    }];
    let mut k = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut l = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let (mut ta, mut tb) = (vec![0.0; n], vec![0.0; n]);
    for m in 0..cfg.n_out {
        for j in 0..sub {
            let t = m as f64 * out_dt + j as f64 * h;
            {
                let [k0, ..] = &mut k;
                let [l0, ..] = &mut l;
                rhs(t, &a, &b, k0, l0);
            }
            for (stage, (c, dc)) in [(0.5, 0usize), (0.5, 1), (1.0, 2)].iter().enumerate() {
                for i in 0..n {
                    ta[i] = a[i] + c * h * k[*dc][i];
                    tb[i] = b[i] + c * h * l[*dc][i];
                }
                let (kk, ll) = (&mut k[stage + 1], &mut l[stage + 1]);
                rhs(t + c * h, &ta, &tb, kk, ll);
            }
            for i in 0..n {
                a[i] += h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
                b[i] += h / 6.0 * (l[0][i] + 2.0 * l[1][i] + 2.0 * l[2][i] + l[3][i]);
            }
        }
        if let Some(v) = a.iter().chain(b.iter()).find(|v| !v.is_finite()) {
            return Err(Error::Input(alloc::format!("finite-difference solution became {v}")));
        }
        let t = (m + 1) as f64 * out_dt;
        s1.push(Field {
            grid,
            t,
            values: a.clone(),
        });
        s2.push(Field {
            grid,
            t,
            values: b.clone(),
        });
    }
    Ok((TimeSlab::new(s1)?, TimeSlab::new(s2)?))
}

/// Reference solution of `u_t - ε u_xx + a u + b ∫ e^{-β(t-τ)} u dτ = F(x,t,u)`.
pub fn fd_solve_p0(
    g: &dyn Fn(f64) -> f64,
    f: &dyn Fn(f64, f64, f64) -> f64,
    p: &ModelParams,
    cfg: &FDConfig,
) -> Result<FdSolution> {
    cfg.validate(p.eps)?;
    let grid = cfg.grid;
    let xs: Vec<f64> = grid.points().collect();
    let u0: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
    let bc = cfg.bc;
    let mut lap = vec![0.0; grid.n];
    let (u, w) = integrate_pair(cfg, u0, vec![0.0; grid.n], |t, u, w, du, dw| {
        laplacian(u, grid.dx, bc, &mut lap);
        for i in 0..u.len() {
            du[i] = p.eps * lap[i] - p.a * u[i] - p.b * w[i] + f(xs[i], t, u[i]);
            dw[i] = -p.beta * w[i] + u[i];
        }
        if bc == Boundary::DirichletFarField {
            let n = u.len();
            du[0] = 0.0;
            du[n - 1] = 0.0;
        }
    })?;
    Ok(FdSolution { u, w })
}

/// Reference solution of `u_t = ε u_xx - v + f(u)`, `v_t = b u - β v`.
pub fn fd_solve_fhn(u0: &Field, v0: &Field, p: &FHNParams, cfg: &FDConfig) -> Result<(TimeSlab, TimeSlab)> {
    let q = &p.base;
    cfg.validate(q.eps)?;
    if u0.grid != cfg.grid || v0.grid != cfg.grid {
        return Err(Error::Input("initial fields must live on the configured grid".into()));
    }
    let bc = cfg.bc;
    let dx = cfg.grid.dx;
    let mut lap = vec![0.0; cfg.grid.n];
    integrate_pair(cfg, u0.values.clone(), v0.values.clone(), |_, u, v, du, dv| {
        laplacian(u, dx, bc, &mut lap);
        for i in 0..u.len() {
            du[i] = q.eps * lap[i] - v[i] + cubic_f(u[i], p);
            dv[i] = q.b * u[i] - q.beta * v[i];
        }
        if bc == Boundary::DirichletFarField {
            let n = u.len();
            du[0] = 0.0;
            du[n - 1] = 0.0;
            dv[0] = 0.0;
            dv[n - 1] = 0.0;
        }
    })
}
