//! Bessel functions of integer order 0 and 1.
//!
//! `J0`/`J1` use the ascending power series for `|x| <= 8`, Miller's
//! backward recurrence (normalised by `J0 + 2 Σ J_2k = 1`) up to `|x| = 25`,
//! and the Hankel asymptotic expansion beyond, where its smallest term is
//! below `exp(-50)`. `I0`/`I1` use the ascending series up to `|x| = 25` and
//! the large-argument expansion beyond.
//!
//! The kernels need `J0(2√w)` and `J1(2√w)/√w` for `w >= 0`; both are entire
//! functions of `w` and are exposed directly as [`j0_root`] and
//! [`j1_root_ratio`].

#[allow(unused_imports)] // inherent f64 methods win when std is linked
use num_traits::Float;

use crate::error::domain_err;
use crate::{Error, Result};

const SERIES_LIMIT: f64 = 8.0;
const MILLER_LIMIT: f64 = 25.0;
const I_SERIES_LIMIT: f64 = 25.0;

/// Largest `|x|` accepted by [`bessel_i0`] and [`bessel_i1`]; beyond it
/// `exp(|x|)` is within a few binades of overflow.
pub const I_OVERFLOW_THRESHOLD: f64 = 700.0;

fn check_finite(x: f64, name: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(domain_err!("{name} requires a finite argument, got {x}"))
    }
}

/// `J0(x)`, the Bessel function of the first kind of order zero.
pub fn bessel_j0(x: f64) -> Result<f64> {
    check_finite(x, "bessel_j0")?;
    Ok(j0(x))
}

/// `J1(x)`, the Bessel function of the first kind of order one.
pub fn bessel_j1(x: f64) -> Result<f64> {
    check_finite(x, "bessel_j1")?;
    Ok(j1(x))
}

/// `I0(x)`, the modified Bessel function of the first kind of order zero.
pub fn bessel_i0(x: f64) -> Result<f64> {
    check_finite(x, "bessel_i0")?;
    check_i_range(x, "bessel_i0")?;
    Ok(i0_scaled(x) * x.abs().exp())
}

/// `I1(x)`, the modified Bessel function of the first kind of order one.
pub fn bessel_i1(x: f64) -> Result<f64> {
    check_finite(x, "bessel_i1")?;
    check_i_range(x, "bessel_i1")?;
    Ok(i1_scaled(x) * x.abs().exp())
}

fn check_i_range(x: f64, name: &str) -> Result<()> {
    if x.abs() > I_OVERFLOW_THRESHOLD {
        Err(Error::Range(alloc::format!(
            "{name}({x}) exceeds the overflow threshold {I_OVERFLOW_THRESHOLD}"
        )))
    } else {
        Ok(())
    }
}

/// Unchecked `J0`; NaN in, NaN out.
pub(crate) fn j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= SERIES_LIMIT {
        j0_root(0.25 * ax * ax)
    } else if ax <= MILLER_LIMIT {
        miller(ax).0
    } else {
        hankel(ax, 0)
    }
}

/// Unchecked `J1`.
pub(crate) fn j1(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax <= SERIES_LIMIT {
        0.5 * ax * j1_root_ratio(0.25 * ax * ax)
    } else if ax <= MILLER_LIMIT {
        miller(ax).1
    } else {
        hankel(ax, 1)
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

/// `J0(2√w)` for `w >= 0`, i.e. `Σ (-w)^k / (k!)^2`.
pub fn j0_root(w: f64) -> f64 {
    if w <= 0.25 * SERIES_LIMIT * SERIES_LIMIT {
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        while term.abs() > 1e-17 * sum.abs().max(1e-300) || k < 3.0 {
            term *= -w / (k * k);
            sum += term;
            k += 1.0;
            if k > 200.0 {
                break;
            }
        }
        sum
    } else {
        j0(2.0 * w.sqrt())
    }
}

/// `J1(2√w)/√w` for `w >= 0`, i.e. `Σ (-w)^k / (k! (k+1)!)`. Equals 1 at
/// `w = 0` and is bounded by 1 in magnitude.
pub fn j1_root_ratio(w: f64) -> f64 {
    if w <= 0.25 * SERIES_LIMIT * SERIES_LIMIT {
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        while term.abs() > 1e-17 * sum.abs().max(1e-300) || k < 3.0 {
            term *= -w / (k * (k + 1.0));
            sum += term;
            k += 1.0;
            if k > 200.0 {
                break;
            }
        }
        sum
    } else {
        let z = w.sqrt();
        j1(2.0 * z) / z
    }
}

/// Backward recurrence for `(J0(x), J1(x))`, `x > 0`.
fn miller(x: f64) -> (f64, f64) {
    let start = x + 10.0 * x.cbrt() + 20.0;
    let mut n = (start as usize + 1) & !1usize;
    let mut next = 0.0; // J_{n+1}
    let mut cur = 1e-30; // J_n
    let mut norm = 0.0;
    let mut j1_val = 0.0;
    while n > 0 {
        let prev = 2.0 * n as f64 / x * cur - next;
        next = cur;
        cur = prev;
        n -= 1;
        if n == 1 {
            j1_val = cur;
        }
        if n % 2 == 0 && n > 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e200 {
            cur *= 1e-200;
            next *= 1e-200;
            norm *= 1e-200;
            j1_val *= 1e-200;
        }
    }
    norm += cur;
    (cur / norm, j1_val / norm)
}

/// Hankel expansion for `J_order(x)`, `x` large and positive.
fn hankel(x: f64, order: u32) -> f64 {
    let mu = 4.0 * (order * order) as f64;
    let inv8x = 1.0 / (8.0 * x);
    let mut p = 1.0;
    let mut q = 0.0;
    let mut coeff = 1.0;
    let mut prev_mag = f64::INFINITY;
    for k in 1..200u32 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        coeff *= (mu - odd * odd) * inv8x / kf;
        let mag = coeff.abs();
        if mag > prev_mag || mag < 1e-18 {
            break;
        }
        prev_mag = mag;
        // k = 1,2,3,4,... contributes to Q,P,Q,P with signs +,-,-,+
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 1 {
            q += sign * coeff;
        } else {
            p += sign * coeff;
        }
    }
    let (s, c) = (x.sin(), x.cos());
    let h = core::f64::consts::FRAC_1_SQRT_2;
    let (cos_chi, sin_chi) = match order {
        0 => (h * (c + s), h * (s - c)),
        _ => (h * (s - c), -h * (s + c)),
    };
    (2.0 / (core::f64::consts::PI * x)).sqrt() * (p * cos_chi - q * sin_chi)
}

/// `exp(-|x|) I0(x)`; finite for every finite `x`.
pub fn i0_scaled(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= I_SERIES_LIMIT {
        let w = 0.25 * ax * ax;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        while term > 1e-17 * sum {
            term *= w / (k * k);
            sum += term;
            k += 1.0;
        }
        sum * (-ax).exp()
    } else {
        i_asymptotic(ax, 0)
    }
}

/// `exp(-|x|) I1(x)`; odd in `x`.
pub fn i1_scaled(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax <= I_SERIES_LIMIT {
        let w = 0.25 * ax * ax;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        while term > 1e-17 * sum {
            term *= w / (k * (k + 1.0));
            sum += term;
            k += 1.0;
        }
        0.5 * ax * sum * (-ax).exp()
    } else {
        i_asymptotic(ax, 1)
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

fn i_asymptotic(x: f64, order: u32) -> f64 {
    let mu = 4.0 * (order * order) as f64;
    let inv8x = 1.0 / (8.0 * x);
    let mut sum = 1.0;
    let mut term = 1.0;
    let mut prev_mag = f64::INFINITY;
    for k in 1..200u32 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= -(mu - odd * odd) * inv8x / kf;
        let mag = term.abs();
        if mag > prev_mag || mag < 1e-18 {
            break;
        }
        prev_mag = mag;
        sum += term;
    }
    sum / (2.0 * core::f64::consts::PI * x).sqrt()
}
