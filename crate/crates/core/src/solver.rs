//! Whole-line solver for `u_t - ε u_xx + a u + b ∫ e^{-β(t-τ)} u dτ = F(x,t,u)`,
//! `u(x,0) = g(x)`, through the integral equation
//!
//! ```text
//! u(t) = K(t) * g + ∫_0^t K(t-τ) * F(·, τ, u(τ)) dτ.
//! ```
//!
//! The time integral uses the trapezoid rule on uniform levels. The map is
//! a contraction on blocks of length `θ` with `C_F θ (1 + π√b/ω) < 1`, so
//! the unknown is iterated one block at a time while earlier blocks stay
//! frozen; their contribution (the memory) is summed once per block.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent f64 methods win when std is linked
use num_traits::Float;

use crate::convolve::{spatial_convolve_refined, Field, Grid, Source, Stencil, TimeSlab};
use crate::error::domain_err;
use crate::kernels::{abs_mass_bound_k_simplified, Kernel};
use crate::model::{beta0, ModelParams};
use crate::quadrature::QuadSpec;
use crate::{Error, Result};

/// Initial datum, source and the data bounds of the problem.
pub struct IVProblem<'a> {
    pub params: ModelParams,
    pub g: Box<dyn Fn(f64) -> f64 + 'a>,
    /// `F(x, t, u)`.
    pub source: Box<dyn Fn(f64, f64, f64) -> f64 + 'a>,
    /// False when `F` ignores `u`; the map is then constant.
    pub depends_on_u: bool,
    /// Lipschitz constant of `F` in `u`.
    pub lipschitz_cf: f64,
    pub sup_f: f64,
    pub sup_g: f64,
}

impl<'a> IVProblem<'a> {
    pub fn new(
        params: ModelParams,
        g: impl Fn(f64) -> f64 + 'a,
        source: impl Fn(f64, f64, f64) -> f64 + 'a,
        lipschitz_cf: f64,
        sup_f: f64,
        sup_g: f64,
    ) -> Result<Self> {
        params.validate()?;
        if !(lipschitz_cf >= 0.0 && lipschitz_cf.is_finite()) {
            return Err(domain_err!("Lipschitz constant must be finite and >= 0, got {lipschitz_cf}"));
        }
        if !(sup_f >= 0.0 && sup_f.is_finite() && sup_g >= 0.0 && sup_g.is_finite()) {
            return Err(domain_err!("sup bounds must be finite and >= 0, got {sup_f}, {sup_g}"));
        }
        Ok(Self {
            params,
            g: Box::new(g),
            source: Box::new(source),
            depends_on_u: true,
            lipschitz_cf,
            sup_f,
            sup_g,
        })
    }

    /// Problem with a source `f(x, t)` that does not depend on `u`.
    pub fn linear(
        params: ModelParams,
        g: impl Fn(f64) -> f64 + 'a,
        f: impl Fn(f64, f64) -> f64 + 'a,
        sup_f: f64,
        sup_g: f64,
    ) -> Result<Self> {
        let mut prob = Self::new(params, g, move |x, t, _| f(x, t), 0.0, sup_f, sup_g)?;
        prob.depends_on_u = false;
        Ok(prob)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub grid: Grid,
    /// Horizon `T`.
    pub t_end: f64,
    /// Block length.
    pub theta: f64,
    pub fixpoint_tol: f64,
    pub max_iters: usize,
    pub quad: QuadSpec,
    /// Upper bound on the time step; the step is also at most `θ/block_steps`.
    pub dt_max: f64,
    /// Minimum number of time steps per block.
    pub block_steps: usize,
    /// Lattice refinement for `K * g`.
    pub g_refine: usize,
}

impl SolverConfig {
    pub fn new(grid: Grid, t_end: f64) -> Self {
        Self {
            grid,
            t_end,
            theta: t_end,
            fixpoint_tol: 1e-10,
            max_iters: 200,
            quad: QuadSpec::default(),
            dt_max: 0.02,
            block_steps: 16,
            g_refine: 4,
        }
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(alloc::format!("horizon must be positive, got {}", self.t_end)));
        }
        if !(self.theta > 0.0) {
            return Err(Error::Config(alloc::format!("block length must be positive, got {}", self.theta)));
        }
        if !(self.fixpoint_tol > 0.0) || self.max_iters == 0 || !(self.dt_max > 0.0) || self.g_refine == 0 || self.block_steps == 0 {
            return Err(Error::Config("tolerance, iteration cap, dt_max, block steps and refinement must be positive".into()));
        }
        Ok(())
    }

    /// `(dt, number of steps, steps per block)`.
    pub fn time_steps(&self) -> (f64, usize, usize) {
        let theta = self.theta.min(self.t_end);
        let target = (theta / self.block_steps as f64).min(self.dt_max);
        let steps = ((self.t_end / target).ceil() as usize).max(1);
        let dt = self.t_end / steps as f64;
        let per_block = ((theta / dt * (1.0 + 1e-12)).floor() as usize).clamp(1, steps);
        (dt, steps, per_block)
    }
}

/// Solver output: `u` at every time level plus the iteration record.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub slab: TimeSlab,
    pub iterations_per_block: Vec<usize>,
    /// Final sup-norm update of each block.
    pub residuals: Vec<f64>,
    /// Sup-norm update after every iteration, per block.
    pub residual_history: Vec<Vec<f64>>,
    /// First time level of each block.
    pub block_starts: Vec<usize>,
    pub theta: f64,
    pub dt: f64,
}

impl Solution {
    /// Ratios of successive updates within each block.
    pub fn contraction_factors(&self) -> Vec<Vec<f64>> {
        self.residual_history
            .iter()
            .map(|h| h.windows(2).filter(|w| w[0] > 0.0).map(|w| w[1] / w[0]).collect())
            .collect()
    }

    pub fn sup_norm(&self) -> f64 {
        self.slab.fields.iter().fold(0.0, |m, f| m.max(f.sup_norm()))
    }
}

/// `θ = safety / (C_F (1 + π√b/ω))`, or `t_end` when `C_F = 0`.
pub fn contraction_theta(lipschitz_cf: f64, p: &ModelParams, safety: f64, t_end: f64) -> f64 {
    if lipschitz_cf == 0.0 {
        return t_end;
    }
    safety / (lipschitz_cf * (1.0 + p.memory_ratio()))
}

/// Theoretical contraction factor `C_F θ (1 + π√b/ω)` of a block.
pub fn contraction_bound(lipschitz_cf: f64, p: &ModelParams, theta: f64) -> f64 {
    lipschitz_cf * theta * (1.0 + p.memory_ratio())
}

/// Stencils for lags `0, dt, ..., steps·dt`.
pub(crate) fn lag_stencils(which: Kernel, dt: f64, steps: usize, h: f64, p: &ModelParams) -> Vec<Stencil> {
    (0..=steps).map(|k| Stencil::new(which, k as f64 * dt, h, p)).collect()
}

/// Trapezoid weight of level `k` in a sum over levels `0..=n`.
#[inline]
pub(crate) fn trapezoid_weight(k: usize, n: usize, dt: f64) -> f64 {
    if n == 0 {
        0.0
    } else if k == 0 || k == n {
        0.5 * dt
    } else {
        dt
    }
}

/// Samples `F(x, t, u)` on the grid lattice padded by `pad` nodes; `u` is
/// held at its end values beyond the grid.
pub(crate) fn source_lattice(
    grid: &Grid,
    pad: usize,
    t: f64,
    u: &[f64],
    f: &dyn Fn(f64, f64, f64) -> f64,
) -> Result<Vec<f64>> {
    let n = grid.n;
    let mut out = Vec::with_capacity(n + 2 * pad);
    for j in 0..n + 2 * pad {
        let i = j.saturating_sub(pad).min(n - 1);
        let x = grid.x_min + (j as f64 - pad as f64) * grid.dx;
        let v = f(x, t, u[i]);
        if !v.is_finite() {
            return Err(Error::Input(alloc::format!("source is not finite at x = {x}, t = {t}")));
        }
        out.push(v);
    }
    Ok(out)
}

/// `out += Σ_{k in ks} w(k, n) S[n-k] * lattices[k]`.
pub(crate) fn add_time_sum(
    out: &mut [f64],
    stencils: &[Stencil],
    lattices: &[Vec<f64>],
    pad: usize,
    n: usize,
    ks: core::ops::Range<usize>,
    dt: f64,
) {
    for k in ks {
        let w = trapezoid_weight(k, n, dt);
        stencils[n - k].accumulate(w, &lattices[k], pad, 1, out);
    }
}

struct Setup {
    dt: f64,
    steps: usize,
    per_block: usize,
    pad: usize,
    stencils: Vec<Stencil>,
    kg: Vec<Vec<f64>>,
}

fn setup(prob: &IVProblem<'_>, cfg: &SolverConfig) -> Result<Setup> {
    cfg.validate()?;
    let p = &prob.params;
    let (dt, steps, per_block) = cfg.time_steps();
    let stencils = lag_stencils(Kernel::K, dt, steps, cfg.grid.dx, p);
    let pad = stencils[steps].half_width();
    let mut kg = Vec::with_capacity(steps + 1);
    kg.push(cfg.grid.points().map(|x| (prob.g)(x)).collect::<Vec<_>>());
    for n in 1..=steps {
        let f = spatial_convolve_refined(Source::Function(&*prob.g), Kernel::K, n as f64 * dt, &cfg.grid, p, cfg.g_refine)?;
        kg.push(f.values);
    }
    if let Some(v) = kg[0].iter().find(|v| !v.is_finite()) {
        return Err(Error::Input(alloc::format!("initial datum value {v} is not finite")));
    }
    Ok(Setup {
        dt,
        steps,
        per_block,
        pad,
        stencils,
        kg,
    })
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn into_slab(grid: Grid, dt: f64, u: Vec<Vec<f64>>) -> Result<TimeSlab> {
    let fields = u
        .into_iter()
        .enumerate()
        .map(|(n, values)| Field {
            grid,
            t: n as f64 * dt,
            values,
        })
        .collect();
    TimeSlab::new(fields)
}

/// One application of the solution map to `v` on every level of the slab.
pub fn apply_map(v: &TimeSlab, prob: &IVProblem<'_>, cfg: &SolverConfig) -> Result<TimeSlab> {
    let s = setup(prob, cfg)?;
    if v.n_t != s.steps + 1 {
        return Err(Error::Input(alloc::format!(
            "slab has {} levels, configuration needs {}",
            v.n_t,
            s.steps + 1
        )));
    }
    let grid = cfg.grid;
    let lattices = v
        .fields
        .iter()
        .enumerate()
        .map(|(k, f)| source_lattice(&grid, s.pad, k as f64 * s.dt, &f.values, &*prob.source))
        .collect::<Result<Vec<_>>>()?;
    let mut u = Vec::with_capacity(s.steps + 1);
    for n in 0..=s.steps {
        let mut out = s.kg[n].clone();
        add_time_sum(&mut out, &s.stencils, &lattices, s.pad, n, 0..n + 1, s.dt);
        u.push(out);
    }
    into_slab(grid, s.dt, u)
}

/// Block-by-block fixed-point iteration starting from `K * g`.
pub fn picard_solve(prob: &IVProblem<'_>, cfg: &SolverConfig) -> Result<Solution> {
    picard_solve_from(prob, cfg, None)
}

/// [`picard_solve`] with an optional initial iterate (levels after the
/// first are used; the first is always `g`).
pub fn picard_solve_from(prob: &IVProblem<'_>, cfg: &SolverConfig, initial: Option<&TimeSlab>) -> Result<Solution> {
    cfg.validate()?;
    let p = &prob.params;
    let cf = if prob.depends_on_u { prob.lipschitz_cf } else { 0.0 };
    let block_theta = cfg.theta.min(cfg.t_end);
    if contraction_bound(cf, p, block_theta) >= 1.0 {
        return Err(Error::Config(alloc::format!(
            "block length {} violates the contraction condition C_F θ (1 + π√b/ω) < 1",
            cfg.theta
        )));
    }
    let s = setup(prob, cfg)?;
    if let Some(init) = initial {
        if init.n_t != s.steps + 1 || init.fields[0].values.len() != cfg.grid.n {
            return Err(Error::Input("initial iterate does not match the time levels".into()));
        }
    }
    let grid = cfg.grid;
    let mut u: Vec<Vec<f64>> = vec![s.kg[0].clone()];
    let mut lattices = vec![source_lattice(&grid, s.pad, 0.0, &u[0], &*prob.source)?];
    let mut sol = Solution {
        slab: TimeSlab {
            t0: 0.0,
            t1: 0.0,
            n_t: 0,
            fields: Vec::new(),
        },
        iterations_per_block: Vec::new(),
        residuals: Vec::new(),
        residual_history: Vec::new(),
        block_starts: Vec::new(),
        theta: block_theta,
        dt: s.dt,
    };

    let mut start = 0;
    while start < s.steps {
        let end = (start + s.per_block).min(s.steps);
        let block = sol.block_starts.len();
        sol.block_starts.push(start + 1);
        // frozen part: K * g plus the sum over levels 0..=start
        let history: Vec<Vec<f64>> = (start + 1..=end)
            .map(|n| {
                let mut h = s.kg[n].clone();
                add_time_sum(&mut h, &s.stencils, &lattices, s.pad, n, 0..start + 1, s.dt);
                h
            })
            .collect();
        let mut v: Vec<Vec<f64>> = match initial {
            Some(init) => (start + 1..=end).map(|n| init.fields[n].values.clone()).collect(),
            None => (start + 1..=end).map(|n| s.kg[n].clone()).collect(),
        };
        let mut hist = Vec::new();
        let mut iters = 0;
        loop {
            iters += 1;
            lattices.truncate(start + 1);
            for (i, vi) in v.iter().enumerate() {
                let n = start + 1 + i;
                lattices.push(source_lattice(&grid, s.pad, n as f64 * s.dt, vi, &*prob.source)?);
            }
            let mut next = history.clone();
            for (i, out) in next.iter_mut().enumerate() {
                let n = start + 1 + i;
                add_time_sum(out, &s.stencils, &lattices, s.pad, n, start + 1..n + 1, s.dt);
            }
            let r = v.iter().zip(&next).fold(0.0f64, |m, (a, b)| m.max(sup_diff(a, b)));
            hist.push(r);
            v = next;
            if !prob.depends_on_u || r <= cfg.fixpoint_tol {
                break;
            }
            if iters >= cfg.max_iters {
                return Err(Error::NonConvergence { block, residuals: hist });
            }
        }
        lattices.truncate(start + 1);
        for (i, vi) in v.iter().enumerate() {
            let n = start + 1 + i;
            lattices.push(source_lattice(&grid, s.pad, n as f64 * s.dt, vi, &*prob.source)?);
        }
        u.extend(v);
        sol.iterations_per_block.push(iters);
        sol.residuals.push(*hist.last().unwrap_or(&0.0));
        sol.residual_history.push(hist);
        start = end;
    }
    sol.slab = into_slab(grid, s.dt, u)?;
    Ok(sol)
}

/// `u = K * g + ∫_0^t K * f dτ` for a source independent of `u`.
pub fn linear_solve<'a>(
    p: &ModelParams,
    g: impl Fn(f64) -> f64 + 'a,
    f: impl Fn(f64, f64) -> f64 + 'a,
    cfg: &SolverConfig,
) -> Result<Solution> {
    let prob = IVProblem::linear(*p, g, f, 0.0, 0.0)?;
    picard_solve(&prob, cfg)
}

/// `‖F‖ β0 + ‖g‖ (e^{-at} + √b π t e^{-ωt})`.
pub fn apriori_bound(prob: &IVProblem<'_>, t: f64) -> f64 {
    apriori_bound_from(&prob.params, prob.sup_g, prob.sup_f, t)
}

/// [`apriori_bound`] from the data norms directly.
pub fn apriori_bound_from(p: &ModelParams, sup_g: f64, sup_f: f64, t: f64) -> f64 {
    beta0(p) * sup_f + sup_g * abs_mass_bound_k_simplified(t, p)
}

/// `‖u1 - u2‖ / (sup|g1 - g2| + sup|F1 - F2|)` over the computed levels.
/// The source difference is sampled along both solutions. Returns 0 when
/// the data coincide.
pub fn continuous_dependence_check(prob1: &IVProblem<'_>, prob2: &IVProblem<'_>, cfg: &SolverConfig) -> Result<f64> {
    let s1 = picard_solve(prob1, cfg)?;
    let s2 = picard_solve(prob2, cfg)?;
    let grid = cfg.grid;
    let h = grid.dx / cfg.g_refine.max(1) as f64;
    let n_fine = (grid.n - 1) * cfg.g_refine.max(1) + 1;
    let dg = (0..n_fine)
        .map(|j| grid.x_min + j as f64 * h)
        .fold(0.0f64, |m, x| m.max(((prob1.g)(x) - (prob2.g)(x)).abs()));
    let mut df = 0.0f64;
    let mut du = 0.0f64;
    for (f1, f2) in s1.slab.fields.iter().zip(&s2.slab.fields) {
        du = du.max(sup_diff(&f1.values, &f2.values));
        for (i, x) in grid.points().enumerate() {
            for u in [f1.values[i], f2.values[i]] {
                df = df.max(((prob1.source)(x, f1.t, u) - (prob2.source)(x, f1.t, u)).abs());
            }
        }
    }
    let data = dg + df;
    if data == 0.0 {
        return Ok(0.0);
    }
    Ok(du / data)
}
