//! FitzHugh-Nagumo system
//!
//! ```text
//! u_t = ε u_xx - v + f(u),   v_t = b u - β v,   f(u) = u(a - u)(u - 1)
//! ```
//!
//! Eliminating `v = v0 e^{-βt} + b ∫ e^{-β(t-τ)} u dτ` and writing
//! `f(u) = -a u + φ(u)` with `φ(u) = u²(a + 1 - u)` turns the `u` equation
//! into the memory problem with source `F(x, t, u) = φ(u) - v0(x) e^{-βt}`.
//! After `u` is found, `v` follows from
//!
//! ```text
//! v = v0 e^{-βt} + b [u0 * K1 - v0 * K2 + ∫_0^t K1(t-τ) * φ(u(τ)) dτ].
//! ```

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent f64 methods win when std is linked
use num_traits::Float;

use crate::convolve::{Field, Grid, Lattice};
use crate::error::domain_err;
use crate::kernels::{abs_mass_bound_k_simplified, Kernel};
use crate::model::{beta1, decay_e, ModelParams};
use crate::solver::{
    add_time_sum, contraction_theta, lag_stencils, picard_solve, source_lattice, trapezoid_weight, IVProblem,
    Solution, SolverConfig,
};
use crate::{Error, Result};

/// Operator parameters with `a` doubling as the threshold of the cubic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FHNParams {
    pub base: ModelParams,
}

impl FHNParams {
    /// Requires `0 < a < 1` on top of the operator constraints.
    pub fn new(a: f64, b: f64, beta: f64, eps: f64) -> Result<Self> {
        let base = ModelParams::new(a, b, beta, eps)?;
        if a >= 1.0 {
            return Err(domain_err!("threshold a must lie in (0, 1), got {a}"));
        }
        Ok(Self { base })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FHNState {
    pub u: Field,
    pub v: Field,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Only the rest state.
    Mono,
    /// Rest state plus the threshold state A and the excited state B.
    Tri,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStates {
    pub regime: Regime,
    pub u_a: Option<f64>,
    pub v_a: Option<f64>,
    pub u_b: Option<f64>,
    pub v_b: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TravelingWave {
    pub gamma: f64,
    pub c: f64,
    /// False when `b ≠ 0`; the logistic profile then only approximates a front.
    pub exact: bool,
}

/// `f(u) = u(a - u)(u - 1)`.
#[inline]
pub fn cubic_f(u: f64, p: &FHNParams) -> f64 {
    u * (p.base.a - u) * (u - 1.0)
}

/// `φ(u) = u²(a + 1 - u)`.
#[inline]
pub fn phi_nl(u: f64, a: f64) -> f64 {
    u * u * (a + 1.0 - u)
}

/// `φ'(u) = 2u(a + 1) - 3u²`.
#[inline]
pub fn phi_nl_prime(u: f64, a: f64) -> f64 {
    u * (2.0 * (a + 1.0) - 3.0 * u)
}

/// Nonzero intersections of `v = f(u)` and `b u = β v`.
pub fn steady_states(p: &FHNParams) -> Result<SteadyStates> {
    let q = &p.base;
    if q.beta == 0.0 {
        return Err(domain_err!("steady states need beta > 0"));
    }
    let r = q.b / q.beta;
    let disc = (1.0 - q.a) * (1.0 - q.a) - 4.0 * r;
    if disc < 0.0 {
        return Ok(SteadyStates {
            regime: Regime::Mono,
            u_a: None,
            v_a: None,
            u_b: None,
            v_b: None,
        });
    }
    let s = disc.sqrt();
    // u_A u_B = a + b/β avoids cancellation in the smaller root
    let ub = 0.5 * (q.a + 1.0 + s);
    let ua = (q.a + r) / ub;
    Ok(SteadyStates {
        regime: Regime::Tri,
        u_a: Some(ua),
        v_a: Some(r * ua),
        u_b: Some(ub),
        v_b: Some(r * ub),
    })
}

/// `γ = 1/√(2ε)`, `c = √(ε/2)(1 - 2a)`.
pub fn traveling_wave(p: &FHNParams) -> TravelingWave {
    let q = &p.base;
    TravelingWave {
        gamma: 1.0 / (2.0 * q.eps).sqrt(),
        c: (0.5 * q.eps).sqrt() * (1.0 - 2.0 * q.a),
        exact: q.b == 0.0,
    }
}

/// `1 / (1 + e^{γz})`.
pub fn wave_profile(z: f64, tw: &TravelingWave) -> f64 {
    1.0 / (1.0 + (tw.gamma * z).exp())
}

/// First crossing of `level` scanning left to right, linearly interpolated.
pub fn front_position(field: &Field, level: f64) -> Option<f64> {
    let v = &field.values;
    (1..v.len()).find_map(|i| {
        let (y0, y1) = (v[i - 1], v[i]);
        if (y0 - level) * (y1 - level) <= 0.0 && y0 != y1 {
            let (x0, x1) = (field.grid.x(i - 1), field.grid.x(i));
            Some(x0 + (level - y0) / (y1 - y0) * (x1 - x0))
        } else {
            None
        }
    })
}

/// `(‖u‖, ‖v‖)` bounds from the data norms and `‖φ‖`.
pub fn estimate_513(u0_sup: f64, v0_sup: f64, phi_sup: f64, p: &FHNParams, t: f64) -> (f64, f64) {
    let q = &p.base;
    let e = decay_e(t, q);
    let bound_u = u0_sup * abs_mass_bound_k_simplified(t, q) + v0_sup * e + crate::model::beta0(q) * phi_sup;
    let bound_v = v0_sup * (-q.beta * t).exp() + q.b * (u0_sup + t * v0_sup) * e + q.b * beta1(q) * phi_sup;
    (bound_u, bound_v)
}

/// Range `[-m, 1 + m]` used for the Lipschitz constant of `φ`, with
/// `m = max(‖u0‖, ‖v0‖ / min(1, β)) + 1/2`.
pub fn working_range(u0_sup: f64, v0_sup: f64, p: &FHNParams) -> (f64, f64) {
    let beta = p.base.beta;
    let scale = if beta > 0.0 { beta.min(1.0) } else { 1.0 };
    let m = u0_sup.max(v0_sup / scale) + 0.5;
    (-m, 1.0 + m)
}

/// `max |φ'|` and `max |φ|` over `[lo, hi]`.
pub fn phi_bounds(lo: f64, hi: f64, a: f64) -> (f64, f64) {
    let inside = |u: f64| u >= lo && u <= hi;
    let mut lip = 0.0f64;
    for u in [lo, hi, (a + 1.0) / 3.0] {
        if inside(u) {
            lip = lip.max(phi_nl_prime(u, a).abs());
        }
    }
    let mut sup = 0.0f64;
    for u in [lo, hi, 0.0, 2.0 * (a + 1.0) / 3.0] {
        if inside(u) {
            sup = sup.max(phi_nl(u, a).abs());
        }
    }
    (lip, sup)
}

/// Output of [`solve_fhn`].
#[derive(Debug, Clone, PartialEq)]
pub struct FhnSolution {
    /// `(u, v)` on every time level, `v` from the kernel formula.
    pub states: Vec<FHNState>,
    /// `v` from trapezoid quadrature of `v0 e^{-βt} + b ∫ e^{-β(t-τ)} u dτ`.
    pub v_direct: Vec<Field>,
    /// Largest difference between the two routes to `v`.
    pub route_gap: f64,
    pub lipschitz_cf: f64,
    /// `max |φ(u)|` over the computed levels.
    pub phi_sup: f64,
    /// Iteration record of the `u` solve.
    pub solve: Solution,
}

fn resample(f: &Field, grid: Grid) -> Field {
    if f.grid == grid {
        f.clone()
    } else {
        Field::from_fn(grid, f.t, |x| f.sample(x))
    }
}

/// Solves for `u` by contraction iteration and evaluates `v` both by the
/// kernel formula and by direct quadrature. The block length is reduced
/// below `cfg.theta` when the Lipschitz constant of `φ` on the working
/// range requires it. `u0` and `v0` are interpolated onto `cfg.grid` and
/// held constant beyond it.
pub fn solve_fhn(u0: &Field, v0: &Field, p: &FHNParams, cfg: &SolverConfig) -> Result<FhnSolution> {
    let q = p.base;
    let grid = cfg.grid;
    let u0 = resample(u0, grid);
    let v0 = resample(v0, grid);
    let (u0_sup, v0_sup) = (u0.sup_norm(), v0.sup_norm());
    let (lo, hi) = working_range(u0_sup, v0_sup, p);
    let (cf, phi_max) = phi_bounds(lo, hi, q.a);
    let mut cfg = *cfg;
    cfg.theta = cfg.theta.min(contraction_theta(cf, &q, 0.5, cfg.t_end));
    cfg.g_refine = 1;
    let a = q.a;
    let beta = q.beta;
    let prob = IVProblem::new(
        q,
        |x| u0.sample(x),
        |x, t, u| phi_nl(u, a) - v0.sample(x) * (-beta * t).exp(),
        cf,
        phi_max + v0_sup,
        u0_sup,
    )?;
    let solve = picard_solve(&prob, &cfg)?;
    let dt = solve.dt;
    let steps = solve.slab.n_t - 1;
    let us: Vec<&[f64]> = solve.slab.fields.iter().map(|f| f.values.as_slice()).collect();

    // kernel route
    let k1 = lag_stencils(Kernel::K1, dt, steps, grid.dx, &q);
    let k2 = lag_stencils(Kernel::K2, dt, steps, grid.dx, &q);
    let pad = k1[steps].half_width().max(k2[steps].half_width());
    let lu0 = Lattice::from_field(&u0, pad);
    let lv0 = Lattice::from_field(&v0, pad);
    let phis = us
        .iter()
        .enumerate()
        .map(|(k, u)| source_lattice(&grid, pad, k as f64 * dt, u, &|_, _, u| phi_nl(u, a)))
        .collect::<Result<Vec<_>>>()?;
    let mut states = Vec::with_capacity(steps + 1);
    let mut v_direct = Vec::with_capacity(steps + 1);
    let mut route_gap = 0.0f64;
    let mut phi_sup = 0.0f64;
    for n in 0..=steps {
        let t = n as f64 * dt;
        let decay = (-beta * t).exp();
        let mut mem = vec![0.0; grid.n];
        lu0.accumulate(&k1[n], 1.0, &mut mem);
        lv0.accumulate(&k2[n], -1.0, &mut mem);
        add_time_sum(&mut mem, &k1, &phis, pad, n, 0..n + 1, dt);
        let v: Vec<f64> = v0.values.iter().zip(&mem).map(|(v0, m)| v0 * decay + q.b * m).collect();

        let mut direct: Vec<f64> = v0.values.iter().map(|v0| v0 * decay).collect();
        for (k, uk) in us.iter().enumerate().take(n + 1) {
            let w = q.b * trapezoid_weight(k, n, dt) * (-beta * (n - k) as f64 * dt).exp();
            if w != 0.0 {
                direct.iter_mut().zip(uk.iter()).for_each(|(d, u)| *d += w * u);
            }
        }
        route_gap = v.iter().zip(&direct).fold(route_gap, |m, (x, y)| m.max((x - y).abs()));
        phi_sup = us[n].iter().fold(phi_sup, |m, u| m.max(phi_nl(*u, a).abs()));
        if let Some(x) = v.iter().find(|x| !x.is_finite()) {
            return Err(Error::Input(alloc::format!("recovery variable became {x} at t = {t}")));
        }
        states.push(FHNState {
            u: solve.slab.fields[n].clone(),
            v: Field { grid, t, values: v },
        });
        v_direct.push(Field {
            grid,
            t,
            values: direct,
        });
    }
    Ok(FhnSolution {
        states,
        v_direct,
        route_gap,
        lipschitz_cf: cf,
        phi_sup,
        solve,
    })
}
