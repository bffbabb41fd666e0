//! Bessel functions against their integral representations
//!
//! ```text
//! J0(x) = 1/π ∫_0^π cos(x sin θ) dθ        J1(x) = 1/π ∫_0^π cos(θ - x sin θ) dθ
//! I0(x) = 1/π ∫_0^π exp(x cos θ) dθ         I1(x) = 1/π ∫_0^π exp(x cos θ) cos θ dθ
//! ```
//!
//! evaluated by the trapezoid rule, which converges geometrically for
//! these periodic integrands.

use std::f64::consts::PI;

use memdiff_core::specfun::{bessel_i0, bessel_i1, bessel_j0, bessel_j1};

fn trapezoid_0_pi(f: impl Fn(f64) -> f64, n: usize) -> f64 {
    let h = PI / n as f64;
    let mut s = 0.5 * (f(0.0) + f(PI));
    for k in 1..n {
        s += f(k as f64 * h);
    }
    s * h / PI
}

fn j0_ref(x: f64) -> f64 {
    trapezoid_0_pi(|th| (x * th.sin()).cos(), 4000)
}

fn j1_ref(x: f64) -> f64 {
    trapezoid_0_pi(|th| (th - x * th.sin()).cos(), 4000)
}

/// Scaled by `e^{-x}` inside the integral to keep large arguments finite.
fn i0_scaled_ref(x: f64) -> f64 {
    trapezoid_0_pi(|th| (x * (th.cos() - 1.0)).exp(), 4000)
}

fn i1_scaled_ref(x: f64) -> f64 {
    trapezoid_0_pi(|th| (x * (th.cos() - 1.0)).exp() * th.cos(), 4000)
}

fn sample() -> Vec<f64> {
    // dense near the branch switches at 8, 12 and 25, plus a spread to 80
    let mut xs: Vec<f64> = (0..=160).map(|i| 0.5 * i as f64).collect();
    for c in [8.0f64, 12.0, 25.0] {
        for d in [-1e-9, -1e-3, 0.0, 1e-3, 1e-9] {
            xs.push(c + d);
        }
    }
    xs.extend([1e-8, 1e-4, 0.3, 2.404825557695773, 3.831705970207512, 7.0155866698156]);
    xs
}

#[test]
fn j_functions_match_integral_representation() {
    let mut worst = (0.0f64, 0.0);
    for x in sample() {
        for (got, want) in [(bessel_j0(x).unwrap(), j0_ref(x)), (bessel_j1(x).unwrap(), j1_ref(x))] {
            let e = (got - want).abs();
            if e > worst.0 {
                worst = (e, x);
            }
        }
    }
    assert!(worst.0 <= 1e-13, "worst absolute error {:e} at x = {}", worst.0, worst.1);
}

#[test]
fn i_functions_match_integral_representation() {
    let mut worst = (0.0f64, 0.0);
    for x in sample().into_iter().filter(|&x| x <= 80.0) {
        let scale = (-x).exp();
        for (got, want) in [
            (bessel_i0(x).unwrap() * scale, i0_scaled_ref(x)),
            (bessel_i1(x).unwrap() * scale, i1_scaled_ref(x)),
        ] {
            // The oracle sums O(1) terms, so near I1(0) = 0 it carries
            // about 1e-15 of absolute roundoff.
            let e = (got - want).abs() / (1e-12 * want.abs() + 1e-14);
            if e > worst.0 {
                worst = (e, x);
            }
        }
    }
    assert!(worst.0 <= 1.0, "error {:e} of the mixed tolerance at x = {}", worst.0, worst.1);
}

#[test]
fn negative_arguments_follow_parity() {
    for x in sample() {
        assert_eq!(bessel_j0(-x).unwrap(), bessel_j0(x).unwrap());
        assert_eq!(bessel_j1(-x).unwrap(), -bessel_j1(x).unwrap());
        if x <= 80.0 {
            assert_eq!(bessel_i0(-x).unwrap(), bessel_i0(x).unwrap());
            assert_eq!(bessel_i1(-x).unwrap(), -bessel_i1(x).unwrap());
        }
    }
}
