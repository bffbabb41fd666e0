//! Pointwise evaluation of the fundamental solution `K` and the companion
//! kernels `K1 = e^{-βt} * K` and `K2 = e^{-βt} * K1` (time convolutions).
//!
//! All three are written as mixtures of heat kernels over a diffusion time
//! `y ∈ (0, t)`:
//!
//! ```text
//! K (x,t) = e^{-at} N(x; 2εt) - ∫ b y e^{-ay-β(t-y)} G1(by(t-y)) N(x; 2εy) dy
//! K1(x,t) =                     ∫     e^{-ay-β(t-y)} G0(by(t-y)) N(x; 2εy) dy
//! K2(x,t) =                     ∫ (t-y) e^{-ay-β(t-y)} G1(by(t-y)) N(x; 2εy) dy
//! ```
//!
//! where `N(x; v)` is the centred Gaussian density of variance `v`,
//! `G0(w) = J0(2√w)` and `G1(w) = J1(2√w)/√w`. `G0` and `G1` are entire and
//! bounded by one, so the only endpoint singularity is the `1/√y` of the
//! Gaussian, removed by the substitution `y = t sin²θ`.

#[allow(unused_imports)] // inherent f64 methods win when std is linked
use num_traits::Float;

use crate::error::domain_err;
use crate::model::{decay_e, ModelParams};
use crate::quadrature::{integrate, kronrod_nodes, EndpointWeight, QuadSpec};
use crate::specfun::{i0_scaled, j0_root, j1_root_ratio};
use crate::Result;

use core::f64::consts::PI;

/// Which kernel to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kernel {
    K,
    K1,
    K2,
}

impl Kernel {
    pub const ALL: [Kernel; 3] = [Kernel::K, Kernel::K1, Kernel::K2];

    pub fn name(self) -> &'static str {
        match self {
            Kernel::K => "K",
            Kernel::K1 => "K1",
            Kernel::K2 => "K2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "K" | "k" => Some(Kernel::K),
            "K1" | "k1" => Some(Kernel::K1),
            "K2" | "k2" => Some(Kernel::K2),
            _ => None,
        }
    }
}

/// A space-time point with `t > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelPoint {
    pub x: f64,
    pub t: f64,
}

impl KernelPoint {
    pub fn new(x: f64, t: f64) -> Self {
        Self { x, t }
    }

    fn check(&self) -> Result<()> {
        if !(self.t > 0.0) || !self.t.is_finite() || !self.x.is_finite() {
            return Err(domain_err!("kernel point needs finite x and t > 0, got ({}, {})", self.x, self.t));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub value: f64,
    pub error_estimate: f64,
}

/// Centred Gaussian density of variance `v`.
#[inline]
pub(crate) fn gauss(x: f64, v: f64) -> f64 {
    (-0.5 * x * x / v).exp() / (2.0 * PI * v).sqrt()
}

/// `ψ = e^{-x²/4εt - at} / (2√(πεt))`: the heat kernel times `e^{-at}`.
pub fn psi(pt: KernelPoint, p: &ModelParams) -> Result<KernelValue> {
    pt.check()?;
    Ok(KernelValue {
        value: (-p.a * pt.t).exp() * gauss(pt.x, 2.0 * p.eps * pt.t),
        error_estimate: 0.0,
    })
}

/// `φ(y,t) = √(by/(t-y)) J1(2√(by(t-y))) e^{-β(t-y)}`, for `0 < y < t`.
pub fn phi(y: f64, t: f64, p: &ModelParams) -> Result<f64> {
    if !(y > 0.0 && y < t) || !t.is_finite() {
        return Err(domain_err!("phi needs 0 < y < t, got y = {y}, t = {t}"));
    }
    let s = t - y;
    Ok(p.b * y * j1_root_ratio(p.b * y * s) * (-p.beta * s).exp())
}

/// Weight of the point mass at diffusion time `t` (only `K` has one).
pub(crate) fn point_mass(which: Kernel, t: f64, p: &ModelParams) -> f64 {
    match which {
        Kernel::K => (-p.a * t).exp(),
        Kernel::K1 | Kernel::K2 => 0.0,
    }
}

/// Mixture density over the diffusion time `y ∈ (0, t)`.
#[inline]
pub(crate) fn mixture_density(which: Kernel, y: f64, t: f64, p: &ModelParams) -> f64 {
    let s = t - y;
    let w = p.b * y * s;
    let damp = (-p.a * y - p.beta * s).exp();
    match which {
        Kernel::K => -p.b * y * damp * j1_root_ratio(w),
        Kernel::K1 => damp * j0_root(w),
        Kernel::K2 => s * damp * j1_root_ratio(w),
    }
}

/// Evaluates the selected kernel by adaptive quadrature over the
/// diffusion time. The endpoint weight in `spec` is ignored.
pub fn kernel(which: Kernel, pt: KernelPoint, p: &ModelParams, spec: &QuadSpec) -> Result<KernelValue> {
    pt.check()?;
    let (x, t) = (pt.x, pt.t);
    let head = point_mass(which, t, p) * gauss(x, 2.0 * p.eps * t);
    if which == Kernel::K && p.b == 0.0 {
        return Ok(KernelValue {
            value: head,
            error_estimate: 0.0,
        });
    }
    let spec = spec.with_weights(EndpointWeight::InvSqrtLeft);
    let r = integrate(
        |y| mixture_density(which, y, t, p) * gauss(x, 2.0 * p.eps * y),
        0.0,
        t,
        &spec,
    )?;
    Ok(KernelValue {
        value: head + r.value,
        error_estimate: r.error_estimate,
    })
}

/// `K`, the fundamental solution.
pub fn kernel_k(pt: KernelPoint, p: &ModelParams, spec: &QuadSpec) -> Result<KernelValue> {
    kernel(Kernel::K, pt, p, spec)
}

/// `K1 = e^{-βt} * K`.
pub fn kernel_k1(pt: KernelPoint, p: &ModelParams, spec: &QuadSpec) -> Result<KernelValue> {
    kernel(Kernel::K1, pt, p, spec)
}

/// `K2 = e^{-βt} * K1`. No separate `b = 0` form is needed.
pub fn kernel_k2(pt: KernelPoint, p: &ModelParams, spec: &QuadSpec) -> Result<KernelValue> {
    kernel(Kernel::K2, pt, p, spec)
}

/// The same mixture integral on a fixed composite Kronrod rule in `θ`.
/// Being a fixed linear functional, it is smooth in `(x, t)`, which finite
/// differences of the kernel need.
pub(crate) fn kernel_fixed(which: Kernel, x: f64, t: f64, p: &ModelParams, panels: usize) -> f64 {
    let head = point_mass(which, t, p) * gauss(x, 2.0 * p.eps * t);
    let h = 0.5 * PI / panels as f64;
    let mut sum = 0.0;
    for i in 0..panels {
        let lo = i as f64 * h;
        for (th, w) in kronrod_nodes(lo, lo + h) {
            let s = th.sin();
            let y = t * s * s;
            let jac = t * (2.0 * th).sin();
            sum += w * jac * mixture_density(which, y, t, p) * gauss(x, 2.0 * p.eps * y);
        }
    }
    head + sum
}

/// Pointwise envelope `e^{-x²/4εt}/(2√(πεt)) [e^{-at} + b t E(t)]`.
pub fn kernel_bound(pt: KernelPoint, p: &ModelParams) -> f64 {
    let t = pt.t;
    gauss(pt.x, 2.0 * p.eps * t) * ((-p.a * t).exp() + p.b * t * decay_e(t, p))
}

/// `∫|K| dξ ≤ e^{-at} + √b π t e^{-(a+β)t/2} I0((β-a)t/2)`.
pub fn abs_mass_bound_k(t: f64, p: &ModelParams) -> f64 {
    let z = 0.5 * (p.beta - p.a) * t;
    // e^{-(a+β)t/2} I0(z) = e^{-ωt} · e^{-|z|} I0(z)
    (-p.a * t).exp() + p.b.sqrt() * PI * t * (-p.omega() * t).exp() * i0_scaled(z)
}

/// Relaxation using `I0(|z|) < e^{|z|}`: `e^{-at} + √b π t e^{-ωt}`.
pub fn abs_mass_bound_k_simplified(t: f64, p: &ModelParams) -> f64 {
    (-p.a * t).exp() + p.b.sqrt() * PI * t * (-p.omega() * t).exp()
}

/// Uniform form `(1 + √b π t) e^{-ωt}`.
pub fn abs_mass_bound_k_uniform(t: f64, p: &ModelParams) -> f64 {
    (1.0 + p.b.sqrt() * PI * t) * (-p.omega() * t).exp()
}

/// `∫|K1| dξ ≤ E(t)`.
pub fn abs_mass_bound_k1(t: f64, p: &ModelParams) -> f64 {
    decay_e(t, p)
}

/// `∫|K2| dξ ≤ t E(t)`.
pub fn abs_mass_bound_k2(t: f64, p: &ModelParams) -> f64 {
    t * decay_e(t, p)
}

/// Bound on the spatial `L1` norm of the selected kernel (the sharpest one
/// available).
pub fn abs_mass_bound(which: Kernel, t: f64, p: &ModelParams) -> f64 {
    match which {
        Kernel::K => abs_mass_bound_k(t, p),
        Kernel::K1 => abs_mass_bound_k1(t, p),
        Kernel::K2 => abs_mass_bound_k2(t, p),
    }
}

/// Central-difference evaluation of `K_t - ε K_xx + a K + b K1` at `pt`.
/// The memory integral of `K` is replaced by `K1`. The result is `O(h²)`.
pub fn pde_residual(pt: KernelPoint, p: &ModelParams, h: f64) -> Result<f64> {
    pt.check()?;
    if !(h > 0.0) || pt.t <= 2.0 * h {
        return Err(domain_err!("pde_residual needs t > 2h > 0, got t = {}, h = {h}", pt.t));
    }
    const PANELS: usize = 48;
    let (x, t) = (pt.x, pt.t);
    let k = |x, t| kernel_fixed(Kernel::K, x, t, p, PANELS);
    let c = k(x, t);
    let k_t = (k(x, t + h) - k(x, t - h)) / (2.0 * h);
    let k_xx = (k(x + h, t) - 2.0 * c + k(x - h, t)) / (h * h);
    let k1 = kernel_fixed(Kernel::K1, x, t, p, PANELS);
    Ok(k_t - p.eps * k_xx + p.a * c + p.b * k1)
}
