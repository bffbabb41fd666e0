//! Spatial convolution with `K`, `K1`, `K2` on a uniform grid, and the
//! space-time convolution `∫_0^t ∫ K(x-ξ, t-τ) F(ξ, τ) dξ dτ`.
//!
//! Data are treated as piecewise linear between lattice nodes. Against a
//! hat function the Gaussian has a closed-form integral, so each kernel
//! reduces to one weight per lattice offset, obtained by integrating those
//! closed forms over the kernel's diffusion-time mixture (see
//! [`crate::kernels`]). Weights depend only on the offset and the time lag
//! and are collected in a [`Stencil`].

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // inherent f64 methods win when std is linked
use num_traits::Float;

use crate::error::domain_err;
use crate::kernels::{mixture_density, point_mass, Kernel};
use crate::model::ModelParams;
use crate::quadrature::{kronrod_nodes, QuadSpec};
use crate::{Error, Result};

/// Lattice refinement used when the source is a function.
pub const DEFAULT_REFINE: usize = 4;

/// Gaussian support, in standard deviations, kept by the stencils.
const RADIUS_SIGMAS: f64 = 8.5;

/// Uniform grid `x_min + i dx`, `i = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
    pub dx: f64,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(domain_err!("grid needs at least 3 points, got {n}"));
        }
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(domain_err!("grid needs finite x_min < x_max, got [{x_min}, {x_max}]"));
        }
        Ok(Self {
            x_min,
            x_max,
            n,
            dx: (x_max - x_min) / (n - 1) as f64,
        })
    }

    /// Grid on `[x_min, x_max]` with spacing as close to `dx` as possible
    /// while landing on `x_max`.
    pub fn with_spacing(x_min: f64, x_max: f64, dx: f64) -> Result<Self> {
        if !(dx > 0.0) {
            return Err(domain_err!("grid spacing must be positive, got {dx}"));
        }
        let n = ((x_max - x_min) / dx).round() as usize + 1;
        Self::new(x_min, x_max, n)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.x(i))
    }
}

/// A function sampled on a grid at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: Grid,
    pub t: f64,
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, t: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::Input(alloc::format!(
                "field has {} values for a grid of {} points",
                values.len(),
                grid.n
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Input(alloc::format!("field value {v} is not finite")));
        }
        Ok(Self { grid, t, values })
    }

    pub fn from_fn(grid: Grid, t: f64, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid,
            t,
            values: grid.points().map(f).collect(),
        }
    }

    pub fn zeros(grid: Grid, t: f64) -> Self {
        Self {
            grid,
            t,
            values: vec![0.0; grid.n],
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Piecewise-linear interpolation, constant beyond the ends.
    pub fn sample(&self, x: f64) -> f64 {
        let g = &self.grid;
        let s = (x - g.x_min) / g.dx;
        if !(s > 0.0) {
            return self.values[0];
        }
        if s >= (g.n - 1) as f64 {
            return self.values[g.n - 1];
        }
        let i = s.floor() as usize;
        let f = s - i as f64;
        self.values[i] * (1.0 - f) + self.values[i + 1] * f
    }
}

/// Uniform time levels `t0 = s_0 < s_1 < ... < s_{n_t-1} = t1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSlab {
    pub t0: f64,
    pub t1: f64,
    pub n_t: usize,
    pub fields: Vec<Field>,
}

impl TimeSlab {
    pub fn new(fields: Vec<Field>) -> Result<Self> {
        if fields.len() < 2 {
            return Err(domain_err!("a time slab needs at least two levels"));
        }
        let t0 = fields[0].t;
        let t1 = fields[fields.len() - 1].t;
        if !(t1 > t0) {
            return Err(domain_err!("time levels must increase, got {t0} .. {t1}"));
        }
        let dt = (t1 - t0) / (fields.len() - 1) as f64;
        for (k, f) in fields.iter().enumerate() {
            if (f.t - (t0 + k as f64 * dt)).abs() > 1e-9 * dt.max(t1.abs()) {
                return Err(domain_err!("time levels are not uniform at index {k}"));
            }
        }
        Ok(Self {
            t0,
            t1,
            n_t: fields.len(),
            fields,
        })
    }

    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / (self.n_t - 1) as f64
    }
}

/// Convolution weights of one kernel at one time lag on a lattice of
/// spacing `h`: `weights[m]` multiplies the value at offset `±m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    pub h: f64,
    pub weights: Vec<f64>,
}

impl Stencil {
    /// Weights of `which` at lag `s >= 0`.
    pub fn new(which: Kernel, s: f64, h: f64, p: &ModelParams) -> Self {
        if s <= 0.0 {
            let w = if which == Kernel::K { 1.0 } else { 0.0 };
            return Self { h, weights: vec![w] };
        }
        let sigma = (2.0 * p.eps * s).sqrt();
        // y = s sin²θ resolves the region where √(2εy) ~ h
        let panels = ((4.0 * sigma / h).ceil() as usize + 8).min(4000);
        Self::with_panels(which, s, h, p, panels)
    }

    pub(crate) fn with_panels(which: Kernel, s: f64, h: f64, p: &ModelParams, panels: usize) -> Self {
        let var = 2.0 * p.eps * s;
        let sigma = var.sqrt();
        let half = ((RADIUS_SIGMAS * sigma + h) / h).ceil() as usize;
        let mut weights = vec![0.0; half + 1];
        let mut scratch = Vec::with_capacity(half + 2);
        let pm = point_mass(which, s, p);
        if pm != 0.0 {
            add_hat_gaussian(&mut weights, &mut scratch, pm, var, h);
        }
        if !(which == Kernel::K && p.b == 0.0) {
            let dth = 0.5 * PI / panels as f64;
            for i in 0..panels {
                let lo = i as f64 * dth;
                for (th, w) in kronrod_nodes(lo, lo + dth) {
                    let sn = th.sin();
                    let y = s * sn * sn;
                    let c = w * s * (2.0 * th).sin() * mixture_density(which, y, s, p);
                    if c != 0.0 {
                        add_hat_gaussian(&mut weights, &mut scratch, c, 2.0 * p.eps * y, h);
                    }
                }
            }
        }
        Self { h, weights }
    }

    pub fn half_width(&self) -> usize {
        self.weights.len() - 1
    }

    /// Sum of all weights: the discrete mass.
    pub fn total(&self) -> f64 {
        self.weights[0] + 2.0 * self.weights[1..].iter().sum::<f64>()
    }

    /// Sum of absolute weights.
    pub fn abs_total(&self) -> f64 {
        self.weights[0].abs() + 2.0 * self.weights[1..].iter().map(|w| w.abs()).sum::<f64>()
    }

    /// Weighted sum centred at `lattice[c]`.
    #[inline]
    pub fn at(&self, lattice: &[f64], c: usize) -> f64 {
        let w = &self.weights;
        let mut acc = w[0] * lattice[c];
        for m in 1..w.len() {
            acc += w[m] * (lattice[c + m] + lattice[c - m]);
        }
        acc
    }

    /// `out[i] += scale * Σ_m w_|m| lattice[first + i*stride + m]`.
    pub fn accumulate(&self, scale: f64, lattice: &[f64], first: usize, stride: usize, out: &mut [f64]) {
        if scale == 0.0 {
            return;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o += scale * self.at(lattice, first + i * stride);
        }
    }
}

/// `weights[m] += c ∫ hat(ξ/h) N(mh - ξ; var) dξ` for every `m` where it
/// is not negligible. With `J(z) = σ φ(z/σ) - z Φ(-z/σ)`, the hat integral
/// is the second difference `(J(z+h) - 2J(z) + J(z-h))/h`.
fn add_hat_gaussian(weights: &mut [f64], scratch: &mut Vec<f64>, c: f64, var: f64, h: f64) {
    let sigma = var.sqrt();
    if sigma == 0.0 {
        weights[0] += c;
        return;
    }
    let top = (((9.0 * sigma + h) / h).ceil() as usize).min(weights.len() - 1);
    let inv_sqrt2pi = 0.5 * core::f64::consts::FRAC_2_SQRT_PI * core::f64::consts::FRAC_1_SQRT_2;
    scratch.clear();
    for m in 0..=top + 1 {
        let z = m as f64 * h;
        let u = z / sigma;
        let j = sigma * inv_sqrt2pi * (-0.5 * u * u).exp()
            - 0.5 * z * libm::erfc(u * core::f64::consts::FRAC_1_SQRT_2);
        scratch.push(j);
    }
    let j = &scratch[..];
    weights[0] += c * (1.0 + 2.0 * (j[1] - j[0]) / h);
    for m in 1..=top {
        weights[m] += c * (j[m + 1] - 2.0 * j[m] + j[m - 1]) / h;
    }
}

/// Values on a lattice of spacing `grid.dx / stride` aligned with `grid`,
/// padded by `pad` nodes on each side.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    pub h: f64,
    pub pad: usize,
    pub stride: usize,
    pub x_start: f64,
    pub values: Vec<f64>,
}

impl Lattice {
    pub fn new(grid: &Grid, stride: usize, pad: usize, f: impl Fn(f64) -> f64) -> Self {
        let h = grid.dx / stride as f64;
        let len = (grid.n - 1) * stride + 1 + 2 * pad;
        let x_start = grid.x_min - pad as f64 * h;
        let values = (0..len).map(|j| f(x_start + j as f64 * h)).collect();
        Self {
            h,
            pad,
            stride,
            x_start,
            values,
        }
    }

    /// Grid field with constant extension beyond the ends.
    pub fn from_field(field: &Field, pad: usize) -> Self {
        let n = field.grid.n;
        let mut values = Vec::with_capacity(n + 2 * pad);
        values.extend(core::iter::repeat(field.values[0]).take(pad));
        values.extend_from_slice(&field.values);
        values.extend(core::iter::repeat(field.values[n - 1]).take(pad));
        Self {
            h: field.grid.dx,
            pad,
            stride: 1,
            x_start: field.grid.x_min - pad as f64 * field.grid.dx,
            values,
        }
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_start + j as f64 * self.h
    }

    /// Applies `stencil` at every grid node, adding `scale` times the result.
    pub fn accumulate(&self, stencil: &Stencil, scale: f64, out: &mut [f64]) {
        debug_assert!(stencil.half_width() <= self.pad);
        stencil.accumulate(scale, &self.values, self.pad, self.stride, out);
    }
}

/// What to convolve: a grid field (constant beyond its ends) or a function
/// of `x` sampled on a refined lattice.
pub enum Source<'a> {
    Field(&'a Field),
    Function(&'a dyn Fn(f64) -> f64),
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().find(|v| !v.is_finite()) {
        Some(v) => Err(Error::Input(alloc::format!("source value {v} is not finite"))),
        None => Ok(()),
    }
}

/// `∫ f(ξ) kernel(x - ξ, t) dξ` at every node of `out_grid`.
///
/// Field sources are read on a lattice of the field's own spacing when it
/// matches `out_grid`, otherwise interpolated; function sources are sampled
/// with refinement [`DEFAULT_REFINE`].
pub fn spatial_convolve(
    src: Source<'_>,
    which: Kernel,
    t: f64,
    out_grid: &Grid,
    p: &ModelParams,
    _spec: &QuadSpec,
) -> Result<Field> {
    let refine = match src {
        Source::Field(_) => 1,
        Source::Function(_) => DEFAULT_REFINE,
    };
    spatial_convolve_refined(src, which, t, out_grid, p, refine)
}

/// [`spatial_convolve`] with an explicit lattice refinement.
pub fn spatial_convolve_refined(
    src: Source<'_>,
    which: Kernel,
    t: f64,
    out_grid: &Grid,
    p: &ModelParams,
    refine: usize,
) -> Result<Field> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(domain_err!("spatial convolution needs t > 0, got {t}"));
    }
    let refine = refine.max(1);
    let h = out_grid.dx / refine as f64;
    let stencil = Stencil::new(which, t, h, p);
    let pad = stencil.half_width();
    let lattice = match src {
        Source::Field(f) if refine == 1 && same_lattice(&f.grid, out_grid) => Lattice::from_field(f, pad),
        Source::Field(f) => Lattice::new(out_grid, refine, pad, |x| f.sample(x)),
        Source::Function(f) => Lattice::new(out_grid, refine, pad, f),
    };
    check_finite(&lattice.values)?;
    let mut out = vec![0.0; out_grid.n];
    lattice.accumulate(&stencil, 1.0, &mut out);
    Ok(Field {
        grid: *out_grid,
        t,
        values: out,
    })
}

fn same_lattice(a: &Grid, b: &Grid) -> bool {
    a.n == b.n && (a.x_min - b.x_min).abs() <= 1e-12 * a.dx && (a.dx - b.dx).abs() <= 1e-12 * a.dx
}

/// `∫_0^t ∫ kernel(x-ξ, t-τ) F(ξ, τ) dξ dτ` at every node of `out_grid`.
///
/// The outer integral uses the lag `s = t - τ = t sin²θ`, which absorbs the
/// `√s` behaviour of the discrete weights near `τ = t`, on composite
/// Kronrod panels doubled until the field changes by less than the
/// tolerance of `spec`.
pub fn spacetime_convolve(
    f: &dyn Fn(f64, f64) -> f64,
    which: Kernel,
    t: f64,
    out_grid: &Grid,
    p: &ModelParams,
    spec: &QuadSpec,
) -> Result<Field> {
    spec.validate()?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(domain_err!("space-time convolution needs t >= 0, got {t}"));
    }
    if t == 0.0 {
        return Ok(Field::zeros(*out_grid, t));
    }
    let refine = DEFAULT_REFINE;
    let h = out_grid.dx / refine as f64;
    let pass = |panels: usize| -> Result<Vec<f64>> {
        let mut out = vec![0.0; out_grid.n];
        let dth = 0.5 * PI / panels as f64;
        for i in 0..panels {
            let lo = i as f64 * dth;
            for (th, w) in kronrod_nodes(lo, lo + dth) {
                let sn = th.sin();
                let s = t * sn * sn;
                let tau = t - s;
                let stencil = Stencil::new(which, s, h, p);
                let lattice = Lattice::new(out_grid, refine, stencil.half_width(), |x| f(x, tau));
                check_finite(&lattice.values)?;
                lattice.accumulate(&stencil, w * t * (2.0 * th).sin(), &mut out);
            }
        }
        Ok(out)
    };
    let mut panels = 2;
    let mut prev = pass(panels)?;
    loop {
        panels *= 2;
        let next = pass(panels)?;
        let sup = next.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let change = next.iter().zip(&prev).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if change <= spec.abs_tol.max(spec.rel_tol * sup) {
            return Ok(Field {
                grid: *out_grid,
                t,
                values: next,
            });
        }
        if panels >= 256 {
            return Err(Error::Accuracy {
                value: sup,
                error_estimate: change,
            });
        }
        prev = next;
    }
}
