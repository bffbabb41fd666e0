//! Operator parameters and the scalar functions built from them.
//!
//! `E(t)` and `χ(t)` are entire functions of the parameters, but their usual
//! closed forms divide by `a - β` and by `ϱ = ½√(4b - (a-β)²)`. Both are
//! evaluated here through forms that stay accurate across the degenerate
//! points: `E` switches to a short Taylor expansion when `a` and `β` are
//! within a relative distance of `1e-8`, and `χ` uses the power series of
//! `sin(ϱt)/ϱ` in `ϱ²` whenever `|ϱ² t²|` is small, continuing analytically
//! to `sinh` when `ϱ²` is negative.

#[allow(unused_imports)] // inherent f64 methods win when std is linked
use num_traits::Float;

use crate::error::domain_err;
use crate::Result;

/// Relative distance below which `a` and `β` are treated as equal.
pub const DEGENERATE_REL_DISTANCE: f64 = 1e-8;

/// Constants `(a, b, β, ε)` of the operator
/// `u_t - ε u_xx + a u + b ∫ exp(-β(t-τ)) u dτ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Reaction rate `a > 0`.
    pub a: f64,
    /// Memory coupling `b >= 0`.
    pub b: f64,
    /// Memory decay rate `β >= 0`.
    pub beta: f64,
    /// Diffusion coefficient `ε > 0`.
    pub eps: f64,
}

/// Derived constants of a parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    pub omega: f64,
    pub beta0: f64,
    pub beta1: f64,
    pub rho: Frequency,
}

/// `ϱ = ½√(4b - (a-β)²)`, which is imaginary when `4b < (a-β)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Frequency {
    /// `4b > (a-β)²`; the value is `ϱ`.
    Oscillatory(f64),
    /// `4b = (a-β)²` (up to the degeneracy switch).
    Critical,
    /// `4b < (a-β)²`; the value is `|ϱ|`.
    Hyperbolic(f64),
}

impl ModelParams {
    pub fn new(a: f64, b: f64, beta: f64, eps: f64) -> Result<Self> {
        let p = Self { a, b, beta, eps };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let Self { a, b, beta, eps } = *self;
        if !(a.is_finite() && b.is_finite() && beta.is_finite() && eps.is_finite()) {
            return Err(domain_err!("parameters must be finite: {self:?}"));
        }
        if a <= 0.0 {
            return Err(domain_err!("a must be positive, got {a}"));
        }
        if b < 0.0 {
            return Err(domain_err!("b must be non-negative, got {b}"));
        }
        if beta < 0.0 {
            return Err(domain_err!("beta must be non-negative, got {beta}"));
        }
        if eps <= 0.0 {
            return Err(domain_err!("eps must be positive, got {eps}"));
        }
        Ok(())
    }

    /// True when `b = 0` or `β = 0`, the degenerate regimes admitted
    /// alongside the strictly positive case.
    pub fn is_degenerate(&self) -> bool {
        self.b == 0.0 || self.beta == 0.0
    }

    /// `ω = min(a, β)`.
    pub fn omega(&self) -> f64 {
        self.a.min(self.beta)
    }

    /// `ϱ² = b - (a-β)²/4`.
    pub fn rho_squared(&self) -> f64 {
        let d = 0.5 * (self.a - self.beta);
        self.b - d * d
    }

    /// `(a+β)/2`, the decay rate shared by `χ` and the mass bound.
    pub fn mean_rate(&self) -> f64 {
        0.5 * (self.a + self.beta)
    }

    pub fn derived(&self) -> DerivedConstants {
        DerivedConstants {
            omega: self.omega(),
            beta0: beta0(self),
            beta1: beta1(self),
            rho: frequency(self),
        }
    }

    /// `π√b/ω`, the memory contribution to the contraction constant. Taken
    /// as zero when `b = 0` regardless of `ω`.
    pub fn memory_ratio(&self) -> f64 {
        if self.b == 0.0 {
            0.0
        } else {
            core::f64::consts::PI * self.b.sqrt() / self.omega()
        }
    }
}

fn frequency(p: &ModelParams) -> Frequency {
    let r2 = p.rho_squared();
    let scale = p.b.max(0.25 * (p.a - p.beta) * (p.a - p.beta));
    if r2.abs() <= DEGENERATE_REL_DISTANCE * scale.max(f64::MIN_POSITIVE) {
        Frequency::Critical
    } else if r2 > 0.0 {
        Frequency::Oscillatory(r2.sqrt())
    } else {
        Frequency::Hyperbolic((-r2).sqrt())
    }
}

/// `E(t) = (e^{-βt} - e^{-at}) / (a - β)`, with limit `t e^{-at}` at `a = β`.
pub fn decay_e(t: f64, p: &ModelParams) -> f64 {
    let d = p.a - p.beta;
    let scale = p.a.max(p.beta);
    if d.abs() <= DEGENERATE_REL_DISTANCE * scale {
        // e^{-βt} (1 - e^{-dt})/d  expanded in d
        let x = d * t;
        (-p.beta * t).exp() * t * (1.0 - 0.5 * x + x * x / 6.0)
    } else {
        (-p.beta * t).exp() * (-(-d * t).exp_m1()) / d
    }
}

/// `sin(ϱt)/ϱ` as an entire function of `ϱ²` (sinh continuation for `ϱ² < 0`).
fn sinc_like(rho2: f64, t: f64) -> f64 {
    let z = rho2 * t * t;
    if z.abs() < 1e-3 {
        // t Σ (-z)^n / (2n+1)!
        let mut term = t;
        let mut sum = t;
        for n in 1..8 {
            let m = (2 * n) as f64;
            term *= -z / (m * (m + 1.0));
            sum += term;
        }
        sum
    } else if rho2 > 0.0 {
        let r = rho2.sqrt();
        (r * t).sin() / r
    } else {
        let r = (-rho2).sqrt();
        (r * t).sinh() / r
    }
}

/// `cos(ϱt)` as an entire function of `ϱ²` (cosh continuation for `ϱ² < 0`).
fn cos_like(rho2: f64, t: f64) -> f64 {
    let z = rho2 * t * t;
    if z.abs() < 1e-3 {
        let mut term = 1.0;
        let mut sum = 1.0;
        for n in 1..8 {
            let m = (2 * n) as f64;
            term *= -z / ((m - 1.0) * m);
            sum += term;
        }
        sum
    } else if rho2 > 0.0 {
        (rho2.sqrt() * t).cos()
    } else {
        ((-rho2).sqrt() * t).cosh()
    }
}

/// `e^{-kt}·s(t)` where `s` is `sin(ϱt)/ϱ` or `cos(ϱt)`, evaluated without
/// overflow in the hyperbolic case (`|ϱ| < k` always holds there).
fn damped(p: &ModelParams, t: f64, cosine: bool) -> f64 {
    let k = p.mean_rate();
    let r2 = p.rho_squared();
    let z = r2 * t * t;
    if r2 < 0.0 && z.abs() >= 1e-3 {
        let q = (-r2).sqrt();
        let up = ((q - k) * t).exp();
        let down = (-(q + k) * t).exp();
        if cosine {
            0.5 * (up + down)
        } else {
            0.5 * (up - down) / q
        }
    } else {
        let s = if cosine {
            cos_like(r2, t)
        } else {
            sinc_like(r2, t)
        };
        (-k * t).exp() * s
    }
}

/// `χ(t) = e^{-(a+β)t/2} sin(ϱt)/ϱ`, the solution of
/// `χ'' + (a+β)χ' + (aβ+b)χ = 0` with `χ(0) = 0`, `χ'(0) = 1`.
pub fn chi(t: f64, p: &ModelParams) -> f64 {
    damped(p, t, false)
}

/// `χ'(t)`.
pub fn chi_prime(t: f64, p: &ModelParams) -> f64 {
    damped(p, t, true) - p.mean_rate() * damped(p, t, false)
}

/// Exact spatial mass of `K(·, t)`: `(∂_t + β) χ(t)`
/// `= e^{-kt} [cos ϱt + ((β-a)/2) sin(ϱt)/ϱ]`. May be negative.
pub fn mass_k_exact(t: f64, p: &ModelParams) -> f64 {
    damped(p, t, true) + 0.5 * (p.beta - p.a) * damped(p, t, false)
}

/// Exact spatial mass of `K1(·, t)`, equal to `χ(t)`.
pub fn mass_k1_exact(t: f64, p: &ModelParams) -> f64 {
    chi(t, p)
}

/// Exact spatial mass of `K2(·, t)`: `∫_0^t e^{-β(t-τ)} χ(τ) dτ`.
///
/// Uses `(e^{-βt} - (∂_t+β)χ - (a-β)χ) / b` when `b t²` is not small and a
/// Gauss-Kronrod rule on the defining integral otherwise (the closed form
/// cancels catastrophically as `b → 0`).
pub fn mass_k2_exact(t: f64, p: &ModelParams) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if p.b * t * t > 1e-2 {
        ((-p.beta * t).exp() - mass_k_exact(t, p) - (p.a - p.beta) * chi(t, p)) / p.b
    } else {
        let panels = 8;
        let h = t / panels as f64;
        let mut sum = 0.0;
        for i in 0..panels {
            let lo = i as f64 * h;
            sum += crate::quadrature::fixed_kronrod(
                |tau| (-p.beta * (t - tau)).exp() * chi(tau, p),
                lo,
                lo + h,
            );
        }
        sum
    }
}

/// `β0 = 1/a + π√b (a+β) / (2 (aβ)^{3/2})`, the bound on `∫_0^t ∫ |K|`.
pub fn beta0(p: &ModelParams) -> f64 {
    let first = 1.0 / p.a;
    if p.b == 0.0 {
        return first;
    }
    let ab = p.a * p.beta;
    first + core::f64::consts::PI * p.b.sqrt() * (p.a + p.beta) / (2.0 * ab * ab.sqrt())
}

/// `β1 = 1/(aβ) = ∫_0^∞ E(τ) dτ`.
pub fn beta1(p: &ModelParams) -> f64 {
    1.0 / (p.a * p.beta)
}

/// Positive root of `σ² = s + a + b/(s+β)` for real `s > max(-a, -β)`.
pub fn sigma(s: f64, p: &ModelParams) -> Result<f64> {
    let floor = (-p.a).max(-p.beta);
    if !(s > floor) || !s.is_finite() {
        return Err(domain_err!(
            "sigma requires s > max(-a, -beta) = {floor}, got {s}"
        ));
    }
    Ok((s + p.a + p.b / (s + p.beta)).sqrt())
}
