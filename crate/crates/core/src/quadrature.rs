//! Adaptive Gauss-Kronrod (7/15) quadrature with global bisection.
//!
//! Integrands with `1/√` endpoint singularities are mapped through
//! `y = lo + (hi-lo) sin²θ` before any adaptivity, which turns them into
//! analytic functions of `θ`. Semi-infinite integrals are summed panel by
//! panel until a geometric tail bound built from the caller's decay rate is
//! below half the absolute tolerance.

use alloc::collections::BinaryHeap;
use core::cmp::Ordering;
use core::f64::consts::FRAC_PI_2;

#[allow(unused_imports)] // inherent f64 methods win when std is linked
use num_traits::Float;

use crate::error::domain_err;
use crate::{Error, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Which endpoints carry an integrable `1/√` singularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EndpointWeight {
    #[default]
    None,
    InvSqrtLeft,
    InvSqrtRight,
    InvSqrtBoth,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub endpoint_weights: EndpointWeight,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_subdivisions: 2000,
            endpoint_weights: EndpointWeight::None,
        }
    }
}

impl QuadSpec {
    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..Self::default()
        }
    }

    pub fn with_weights(mut self, w: EndpointWeight) -> Self {
        self.endpoint_weights = w;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(domain_err!(
                "tolerances must be positive (rel {}, abs {})",
                self.rel_tol,
                self.abs_tol
            ));
        }
        if self.max_subdivisions == 0 {
            return Err(domain_err!("max_subdivisions must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// One 15-point Kronrod panel: `(value, error, ∫|f|, ∫|f - mean|)`.
fn gk15<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64) -> (f64, f64, f64, f64) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = fc.abs() * WGK[7];
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let scale = half.abs();
    let result = res_k * half;
    res_abs *= scale;
    res_asc *= scale;
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    (result, err, res_abs, res_asc)
}

/// Roundoff floor for a panel error estimate.
fn roundoff_floor(res_abs: f64) -> f64 {
    4.0 * f64::EPSILON * res_abs
}

/// Single 15-point Kronrod panel over `[lo, hi]`, no error control.
pub fn fixed_kronrod<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64) -> f64 {
    gk15(&mut f, lo, hi).0
}

/// Nodes and weights of the 15-point Kronrod rule mapped onto `[lo, hi]`.
pub fn kronrod_nodes(lo: f64, hi: f64) -> [(f64, f64); 15] {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut out = [(center, WGK[7] * half); 15];
    for j in 0..7 {
        out[2 * j] = (center - half * XGK[j], WGK[j] * half);
        out[2 * j + 1] = (center + half * XGK[j], WGK[j] * half);
    }
    out
}

struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
    res_abs: f64,
    at_floor: bool,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        // floor-limited segments sink to the bottom; otherwise largest error first
        match (self.at_floor, other.at_floor) {
            (false, true) => Ordering::Greater,
            (true, false) => Ordering::Less,
            _ => self.error.total_cmp(&other.error),
        }
    }
}

fn make_segment<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64) -> Segment {
    let (value, err, res_abs, _) = gk15(f, lo, hi);
    let floor = roundoff_floor(res_abs);
    let at_floor = err <= floor;
    Segment {
        lo,
        hi,
        value,
        error: err.max(floor),
        res_abs,
        at_floor,
    }
}

/// Adaptive integration of a regular (possibly transformed) integrand.
/// Returns the result and `∫|f|`.
fn adapt<F: FnMut(f64) -> f64>(
    f: &mut F,
    lo: f64,
    hi: f64,
    spec: &QuadSpec,
) -> Result<(QuadResult, f64)> {
    let mut heap = BinaryHeap::new();
    let first = make_segment(f, lo, hi);
    let mut evaluations = 15;
    let mut value = first.value;
    let mut error = first.error;
    heap.push(first);
    loop {
        let target = spec.abs_tol.max(spec.rel_tol * value.abs());
        let done = error <= target
            || heap.peek().map_or(true, |s| s.at_floor)
            || !error.is_finite();
        if done || heap.len() >= spec.max_subdivisions {
            // resum to shed accumulated update drift
            value = heap.iter().map(|s| s.value).sum();
            error = heap.iter().map(|s| s.error).sum();
            let abs_value: f64 = heap.iter().map(|s| s.res_abs).sum();
            let target = spec.abs_tol.max(spec.rel_tol * value.abs());
            let floor_limited = heap.iter().all(|s| s.at_floor || s.error <= target);
            if !value.is_finite() || !error.is_finite() {
                return Err(Error::Accuracy {
                    value,
                    error_estimate: error,
                });
            }
            if error <= target || floor_limited {
                return Ok((
                    QuadResult {
                        value,
                        error_estimate: error,
                        evaluations,
                    },
                    abs_value,
                ));
            }
            return Err(Error::Accuracy {
                value,
                error_estimate: error,
            });
        }
        let worst = heap.pop().expect("heap is never empty here");
        let mid = 0.5 * (worst.lo + worst.hi);
        let left = make_segment(f, worst.lo, mid);
        let right = make_segment(f, mid, worst.hi);
        evaluations += 30;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
}

fn integrate_inner<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    spec: &QuadSpec,
) -> Result<(QuadResult, f64)> {
    spec.validate()?;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(domain_err!("integration requires finite lo < hi, got [{lo}, {hi}]"));
    }
    let len = hi - lo;
    match spec.endpoint_weights {
        EndpointWeight::None => adapt(&mut f, lo, hi, spec),
        EndpointWeight::InvSqrtLeft | EndpointWeight::InvSqrtBoth => {
            let mut g = |theta: f64| {
                let s = theta.sin();
                let y = lo + len * s * s;
                f(y) * len * (2.0 * theta).sin()
            };
            adapt(&mut g, 0.0, FRAC_PI_2, spec)
        }
        EndpointWeight::InvSqrtRight => {
            let mut g = |theta: f64| {
                let s = theta.sin();
                let y = hi - len * s * s;
                f(y) * len * (2.0 * theta).sin()
            };
            adapt(&mut g, 0.0, FRAC_PI_2, spec)
        }
    }
}

/// `∫_lo^hi f(y) dy`.
///
/// With an inverse-square-root endpoint weight the integrand may be
/// unbounded like `1/√(y-lo)` and/or `1/√(hi-y)`; it is never evaluated at the
/// endpoints themselves.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, lo: f64, hi: f64, spec: &QuadSpec) -> Result<QuadResult> {
    integrate_inner(f, lo, hi, spec).map(|(r, _)| r)
}

/// `∫_0^∞ f(t) dt` for an integrand with `|f(t)| <= C e^{-λt}` at large `t`.
pub fn integrate_semi_infinite<F: FnMut(f64) -> f64>(
    mut f: F,
    decay_rate: f64,
    spec: &QuadSpec,
) -> Result<QuadResult> {
    if !(decay_rate > 0.0) || !decay_rate.is_finite() {
        return Err(domain_err!("decay rate must be positive, got {decay_rate}"));
    }
    spec.validate()?;
    let panel = 2.0 / decay_rate;
    let q_model = (-decay_rate * panel).exp();
    let mut total = 0.0;
    let mut total_err = 0.0;
    let mut evaluations = 0;
    let mut prev_abs: Option<f64> = None;
    let mut lo = 0.0;
    let panel_spec = QuadSpec {
        abs_tol: 0.25 * spec.abs_tol,
        ..*spec
    };
    for k in 0..2000 {
        let first_spec = QuadSpec {
            endpoint_weights: if k == 0 {
                spec.endpoint_weights
            } else {
                EndpointWeight::None
            },
            ..panel_spec
        };
        let hi = lo + panel;
        let (r, abs_value) = match integrate_inner(&mut f, lo, hi, &first_spec) {
            Ok(v) => v,
            Err(Error::Accuracy { value, error_estimate }) => {
                return Err(Error::Accuracy {
                    value: total + value,
                    error_estimate: total_err + error_estimate,
                })
            }
            Err(e) => return Err(e),
        };
        total += r.value;
        total_err += r.error_estimate;
        evaluations += r.evaluations;
        let ratio = match prev_abs {
            Some(p) if p > 0.0 => (abs_value / p).max(q_model),
            _ => q_model,
        };
        prev_abs = Some(abs_value);
        lo = hi;
        if k >= 2 && ratio < 1.0 {
            let tail = abs_value * ratio / (1.0 - ratio);
            let target = spec.abs_tol.max(spec.rel_tol * total.abs());
            if tail <= 0.5 * target {
                return Ok(QuadResult {
                    value: total,
                    error_estimate: total_err + tail,
                    evaluations,
                });
            }
        }
    }
    Err(Error::Accuracy {
        value: total,
        error_estimate: f64::INFINITY,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn inverse_sqrt_left() {
        let spec = QuadSpec::default().with_weights(EndpointWeight::InvSqrtLeft);
        let r = integrate(|y| 1.0 / y.sqrt(), 0.0, 1.0, &spec).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_sqrt_both() {
        let spec = QuadSpec::default().with_weights(EndpointWeight::InvSqrtBoth);
        let r = integrate(|y| 1.0 / (y * (1.0 - y)).sqrt(), 0.0, 1.0, &spec).unwrap();
        assert!((r.value - PI).abs() < 1e-12);
    }

    #[test]
    fn inverse_sqrt_right() {
        let spec = QuadSpec::default().with_weights(EndpointWeight::InvSqrtRight);
        let r = integrate(|y| 1.0 / (3.0 - y).sqrt(), 2.0, 3.0, &spec).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_weighted_sqrt() {
        // ∫_0^1 e^{-y}/√y dy = √π erf(1)
        let spec = QuadSpec::with_tolerances(1e-12, 1e-14).with_weights(EndpointWeight::InvSqrtLeft);
        let r = integrate(|y| (-y).exp() / y.sqrt(), 0.0, 1.0, &spec).unwrap();
        assert!((r.value - 1.4936482656248540).abs() < 1e-12);
    }

    #[test]
    fn semi_infinite_examples() {
        let spec = QuadSpec::with_tolerances(1e-13, 1e-15);
        let r = integrate_semi_infinite(|t| (-t).exp(), 1.0, &spec).unwrap();
        assert!((r.value - 1.0).abs() < 1e-11);
        let r = integrate_semi_infinite(|t| t * (-2.0 * t).exp(), 2.0, &spec).unwrap();
        assert!((r.value - 0.25).abs() < 1e-11);
        let r = integrate_semi_infinite(|t| (-t).exp() * t.cos(), 1.0, &spec).unwrap();
        assert!((r.value - 0.5).abs() < 1e-11);
    }

    #[test]
    fn errors() {
        let spec = QuadSpec::default();
        assert!(matches!(integrate(|x| x, 1.0, 0.0, &spec), Err(Error::Domain(_))));
        assert!(matches!(integrate_semi_infinite(|x| x, 0.0, &spec), Err(Error::Domain(_))));
        let bad = QuadSpec {
            rel_tol: 0.0,
            ..spec
        };
        assert!(integrate(|x| x, 0.0, 1.0, &bad).is_err());
        let tight = QuadSpec {
            max_subdivisions: 3,
            rel_tol: 1e-14,
            abs_tol: 1e-300,
            ..spec
        };
        match integrate(|x: f64| (50.0 * x).sin().abs(), 0.0, 10.0, &tight) {
            Err(Error::Accuracy { value, error_estimate }) => {
                assert!(value.is_finite() && error_estimate > 0.0);
            }
            other => panic!("expected accuracy error, got {other:?}"),
        }
    }

    #[test]
    fn kronrod_nodes_integrate_polynomials() {
        let s: f64 = kronrod_nodes(-1.0, 3.0).iter().map(|&(x, w)| w * x.powi(10)).sum();
        let exact = (3f64.powi(11) + 1.0) / 11.0;
        assert!((s - exact).abs() < 1e-10 * exact);
    }
}
