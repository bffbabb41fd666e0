//! Acceptance run: one line per criterion, non-zero exit on any failure.

use std::process::ExitCode;
use std::time::Instant;

use memdiff_core::convolve::{Field, Grid, TimeSlab};
use memdiff_core::fhn::{estimate_513, front_position, solve_fhn, traveling_wave, wave_profile, FHNParams, FhnSolution};
use memdiff_core::kernels::{kernel, pde_residual, Kernel, KernelPoint};
use memdiff_core::oracle::{fd_solve_fhn, fd_solve_p0, FDConfig};
use memdiff_core::quadrature::{integrate, integrate_semi_infinite, QuadSpec};
use memdiff_core::solver::{
    apriori_bound_from, contraction_bound, contraction_theta, linear_solve, picard_solve, IVProblem, Solution,
    SolverConfig,
};
use memdiff_core::verify::{
    all_passed, check_kernel_estimates, check_mass_bounds, degenerate_battery, default_battery, full_battery,
    run_all, VerifyConfig,
};
use memdiff_core::model::{chi, decay_e};
use memdiff_core::ModelParams;

struct Outcome {
    passed: bool,
    detail: String,
}

fn report(n: usize, what: &str, o: &Outcome, secs: f64) -> bool {
    let tag = if o.passed { "PASS" } else { "FAIL" };
    println!("criterion {n:>2} [{tag}] {what} ({secs:.1} s): {}", o.detail);
    o.passed
}

fn p(a: f64, b: f64, beta: f64, eps: f64) -> ModelParams {
    ModelParams { a, b, beta, eps }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Closed-form transform `e^{-rσ}/(2√ε σ)`, `σ² = s + a + b/(s+β)`.
fn transform_rhs(r: f64, s: f64, q: &ModelParams) -> f64 {
    let sigma = (s + q.a + q.b / (s + q.beta)).sqrt();
    (-r * sigma).exp() / (2.0 * q.eps.sqrt() * sigma)
}

/// `χ` and `χ'` written out per branch of `ϱ² = b - (a-β)²/4`.
fn chi_pair(t: f64, q: &ModelParams) -> (f64, f64) {
    let m = 0.5 * (q.a + q.beta);
    let r2 = q.b - 0.25 * (q.a - q.beta) * (q.a - q.beta);
    let (s, c) = if r2 > 0.0 {
        let r = r2.sqrt();
        ((r * t).sin() / r, (r * t).cos())
    } else if r2 < 0.0 {
        let r = (-r2).sqrt();
        ((r * t).sinh() / r, (r * t).cosh())
    } else {
        (t, 1.0)
    };
    let e = (-m * t).exp();
    (e * s, e * (c - m * s))
}

fn laplace() -> Outcome {
    let inner = QuadSpec::with_tolerances(1e-11, f64::MIN_POSITIVE);
    let outer = QuadSpec::with_tolerances(1e-10, 1e-14);
    let mut worst = 0.0f64;
    let mut at = String::new();
    for q in default_battery() {
        for r in [0.1, 1.0, 3.0] {
            for s in [0.5, 1.0, 5.0] {
                let x = r * q.eps.sqrt();
                let lhs = integrate_semi_infinite(
                    |t| {
                        if t <= 0.0 {
                            0.0
                        } else {
                            (-s * t).exp() * kernel(Kernel::K, KernelPoint::new(x, t), &q, &inner).unwrap().value
                        }
                    },
                    s + q.a.min(q.beta),
                    &outer,
                )
                .unwrap()
                .value;
                let rhs = transform_rhs(r, s, &q);
                let rel = (lhs - rhs).abs() / rhs;
                if rel >= worst {
                    worst = rel;
                    at = format!("{q:?} r={r} s={s}");
                }
            }
        }
    }
    Outcome {
        passed: worst <= 1e-6,
        detail: format!("worst relative error {worst:.2e} at {at}"),
    }
}

fn mass() -> Outcome {
    let spec = QuadSpec::with_tolerances(1e-11, 1e-15);
    let mut worst = 0.0f64;
    let mut at = String::new();
    for q in full_battery() {
        for t in [0.1, 0.5, 1.0, 2.0, 5.0] {
            let (chi, chi_p) = chi_pair(t, &q);
            let half = 12.0 * (2.0 * q.eps * t).sqrt();
            for (which, exact) in [(Kernel::K, chi_p + q.beta * chi), (Kernel::K1, chi)] {
                let m = 2.0
                    * integrate(
                        |x| kernel(which, KernelPoint::new(x, t), &q, &spec).unwrap().value,
                        0.0,
                        half,
                        &spec,
                    )
                    .unwrap()
                    .value;
                let d = (m - exact).abs();
                if d >= worst {
                    worst = d;
                    at = format!("{} {q:?} t={t}", which.name());
                }
            }
        }
    }
    Outcome {
        passed: worst <= 1e-6,
        detail: format!("worst |mass - closed form| {worst:.2e} at {at}"),
    }
}

fn residual() -> Outcome {
    let q = p(1.0, 1.0, 1.0, 1.0);
    let spec = QuadSpec::with_tolerances(1e-12, 1e-15);
    let mut ok = true;
    let mut ratios = Vec::new();
    let mut worst_rel = 0.0f64;
    for (x, t) in [(0.7, 0.8), (0.3, 0.5), (-1.1, 1.0), (1.6, 1.5), (0.5, 2.0)] {
        let pt = KernelPoint::new(x, t);
        let r: Vec<f64> = [1e-2, 5e-3, 2.5e-3].iter().map(|&h| pde_residual(pt, &q, h).unwrap()).collect();
        for w in r.windows(2) {
            let ratio = w[0] / w[1];
            ok &= (3.5..=4.5).contains(&ratio);
            ratios.push(ratio);
        }
        let k = kernel(Kernel::K, pt, &q, &spec).unwrap().value.abs();
        worst_rel = worst_rel.max(r[2].abs() / k);
    }
    ok &= worst_rel <= 1e-4;
    let (lo, hi) = ratios.iter().fold((f64::MAX, f64::MIN), |(l, h), r| (l.min(*r), h.max(*r)));
    Outcome {
        passed: ok,
        detail: format!("Richardson ratios in [{lo:.3}, {hi:.3}], terminal relative residual {worst_rel:.2e}"),
    }
}

fn bounds() -> Outcome {
    let cfg = VerifyConfig::default();
    let mut failures = Vec::new();
    let mut worst = f64::INFINITY;
    for q in full_battery() {
        for r in [check_kernel_estimates(&q, &cfg), check_mass_bounds(&q, &cfg)] {
            worst = worst.min(r.margin);
            if !r.passed {
                failures.push(format!("{} {:?}: {}", r.name, q, r.note));
            }
        }
    }
    Outcome {
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("0 violations over {} samples per set, smallest slack {worst:.2e}", cfg.bound_samples)
        } else {
            failures.join("; ")
        },
    }
}

struct LinearRun {
    q: ModelParams,
    sol: Solution,
    cf: f64,
}

fn contraction() -> (Outcome, LinearRun) {
    let q = p(1.0, 1.0, 1.0, 1.0);
    let cf = 0.5;
    let grid = Grid::new(-10.0, 10.0, 201).unwrap();
    let theta = contraction_theta(cf, &q, 0.5, 2.0);
    let prob = IVProblem::new(q, |x| (-x * x).exp(), |_, _, u| -0.5 * u, cf, 1.0, 1.0).unwrap();
    let cfg = SolverConfig::new(grid, 2.0).with_theta(theta);
    let sol = picard_solve(&prob, &cfg).unwrap();
    let limit = contraction_bound(cf, &q, sol.theta) + 0.05;
    let worst = sol.contraction_factors().iter().flatten().fold(0.0f64, |m, r| m.max(*r));
    (
        Outcome {
            passed: worst <= limit,
            detail: format!("{} blocks, worst factor {worst:.4} vs limit {limit:.4}", sol.block_starts.len()),
        },
        LinearRun { q, sol, cf },
    )
}

fn explicit_linear() -> (Outcome, LinearRun) {
    let q = p(1.0, 1.0, 1.0, 1.0);
    let start = Instant::now();
    let grid = Grid::new(-20.0, 20.0, 801).unwrap();
    let cfg = SolverConfig::new(grid, 2.0);
    let g = |x: f64| (-x * x).exp();
    let f = |x: f64, t: f64| (-t).exp() * x.cos();
    let sol = linear_solve(&q, g, f, &cfg).unwrap();
    let wide = Grid::new(-30.0, 30.0, 1201).unwrap();
    let fd = fd_solve_p0(&g, &|x, t, _| f(x, t), &q, &FDConfig::new(wide, 2.0, q.eps, 8)).unwrap();
    let err = compare_on(&sol.slab, &fd.u, 200, 1);
    let secs = start.elapsed().as_secs_f64();
    (
        Outcome {
            passed: err <= 1e-3 && secs <= 120.0,
            detail: format!("L∞ difference {err:.2e} over t = 0, 0.25, ..., 2"),
        },
        LinearRun { q, sol, cf: 0.0 },
    )
}

/// L∞ difference at the oracle's stored times; solver node `i` sits at
/// oracle node `offset + stride * i`.
fn compare_on(slab: &TimeSlab, oracle: &TimeSlab, offset: usize, stride: usize) -> f64 {
    let mut err = 0.0f64;
    for of in &oracle.fields {
        let Some(sf) = slab.fields.iter().find(|f| (f.t - of.t).abs() < 1e-9) else {
            continue;
        };
        for (i, v) in sf.values.iter().enumerate() {
            err = err.max((v - of.values[offset + stride * i]).abs());
        }
    }
    err
}

struct FhnRun {
    fp: FHNParams,
    sol: FhnSolution,
    u0_sup: f64,
    v0_sup: f64,
}

fn fhn_pipeline() -> (Outcome, FhnRun) {
    let fp = FHNParams::new(0.25, 0.01, 0.5, 1.0).unwrap();
    let grid = Grid::new(-20.0, 20.0, 401).unwrap();
    let u0 = Field::from_fn(grid, 0.0, |x| 0.6 * (-x * x).exp());
    let v0 = Field::zeros(grid, 0.0);
    let cfg = SolverConfig {
        block_steps: 4,
        ..SolverConfig::new(grid, 2.0)
    };
    let sol = solve_fhn(&u0, &v0, &fp, &cfg).unwrap();
    let wide = Grid::new(-30.0, 30.0, 1201).unwrap();
    let wu0 = Field::from_fn(wide, 0.0, |x| 0.6 * (-x * x).exp());
    let wv0 = Field::zeros(wide, 0.0);
    let (fu, fv) = fd_solve_fhn(&wu0, &wv0, &fp, &FDConfig::new(wide, 2.0, 1.0, 1)).unwrap();
    let last = sol.states.last().unwrap();
    let pick = |s: &TimeSlab| -> Vec<f64> { (0..grid.n).map(|i| s.fields[1].values[200 + 2 * i]).collect() };
    let eu = sup_diff(&last.u.values, &pick(&fu));
    let ev = sup_diff(&last.v.values, &pick(&fv));
    let gap = sol.route_gap;
    (
        Outcome {
            passed: eu <= 1e-2 && ev <= 1e-2 && gap <= 1e-5,
            detail: format!(
                "L∞(u) {eu:.2e}, L∞(v) {ev:.2e} at t = 2; v routes differ by {gap:.2e} over {} levels",
                sol.states.len()
            ),
        },
        FhnRun {
            fp,
            sol,
            u0_sup: 0.6,
            v0_sup: 0.0,
        },
    )
}

fn wave() -> (Outcome, FhnRun) {
    let fp = FHNParams::new(0.25, 0.0, 1.0, 0.5).unwrap();
    let tw = traveling_wave(&fp);
    let half = 20.0 / tw.gamma + tw.c.abs() + 2.0;
    let grid = Grid::with_spacing(-half, half, 0.05).unwrap();
    let u0 = Field::from_fn(grid, 0.0, |x| wave_profile(x, &tw));
    let v0 = Field::zeros(grid, 0.0);
    let cfg = SolverConfig {
        block_steps: 4,
        ..SolverConfig::new(grid, 1.0)
    };
    let sol = solve_fhn(&u0, &v0, &fp, &cfg).unwrap();
    let last = sol.states.last().unwrap();
    let err = grid
        .points()
        .zip(&last.u.values)
        .fold(0.0f64, |m, (x, u)| m.max((u - wave_profile(x - 0.25, &tw)).abs()));
    let x0 = front_position(&sol.states[0].u, 0.5).unwrap();
    let x1 = front_position(&last.u, 0.5).unwrap();
    let speed = (x1 - x0) / last.u.t;
    let rel = (speed - 0.25).abs() / 0.25;
    (
        Outcome {
            passed: err <= 1e-3 && rel <= 0.02,
            detail: format!("L∞ {err:.2e} at t = 1, front speed {speed:.5} ({:.2}% off)", 100.0 * rel),
        },
        FhnRun {
            fp,
            sol,
            u0_sup: u0.sup_norm(),
            v0_sup: 0.0,
        },
    )
}

fn apriori(linear: &[&LinearRun], fhn: &[&FhnRun]) -> Outcome {
    let tol = 1e-6;
    let mut violations = 0;
    let mut checked = 0;
    let mut slack = f64::INFINITY;
    for run in linear {
        let sup_g = run.sol.slab.fields[0].sup_norm();
        // ‖F‖ over the computed solution: C_F sup|u| for F = -C_F u, 1 for the cosine source
        let sup_f = if run.cf > 0.0 { run.cf * run.sol.sup_norm() } else { 1.0 };
        for f in &run.sol.slab.fields {
            let b = apriori_bound_from(&run.q, sup_g, sup_f, f.t);
            checked += 1;
            slack = slack.min(b - f.sup_norm());
            if f.sup_norm() > b + tol {
                violations += 1;
            }
        }
    }
    for run in fhn {
        for s in &run.sol.states {
            let (bu, bv) = estimate_513(run.u0_sup, run.v0_sup, run.sol.phi_sup, &run.fp, s.u.t);
            checked += 2;
            slack = slack.min((bu - s.u.sup_norm()).min(bv - s.v.sup_norm()));
            if s.u.sup_norm() > bu + tol {
                violations += 1;
            }
            if s.v.sup_norm() > bv + tol {
                violations += 1;
            }
        }
    }
    Outcome {
        passed: violations == 0,
        detail: format!("{violations} violations in {checked} level checks, smallest slack {slack:.2e}"),
    }
}

fn degenerate() -> Outcome {
    let battery: Vec<ModelParams> = degenerate_battery()
        .into_iter()
        .filter(|q| q.a == q.beta || 4.0 * q.b == (q.a - q.beta) * (q.a - q.beta))
        .collect();
    let reports = run_all(&battery, &VerifyConfig::default());
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| !r.passed)
        .map(|r| format!("{} {:?}: {}", r.name, r.params, r.note))
        .collect();
    let cont = reports
        .iter()
        .filter(|r| r.name == "branch_continuity")
        .fold(0.0f64, |m, r| m.max(r.margin));
    // Plain one-sided difference, for the record: it carries the O(1e-6)
    // parameter slope of E and χ and is not a jump measure.
    let mut raw = 0.0f64;
    for q in &battery {
        for t in [0.1, 0.5, 1.0, 2.0, 5.0] {
            for (da, dbeta) in [(1e-6, 0.0), (-1e-6, 0.0), (0.0, 1e-6), (0.0, -1e-6)] {
                let n = p(q.a + da, q.b, q.beta + dbeta, q.eps);
                raw = raw.max((decay_e(t, q) - decay_e(t, &n)).abs());
                raw = raw.max((chi(t, q) - chi(t, &n)).abs());
            }
        }
    }
    Outcome {
        passed: all_passed(&reports) && battery.len() == 2,
        detail: if failed.is_empty() {
            format!(
                "{} checks over {} sets passed, branch jump {cont:.2e} (one-sided difference of E, χ {raw:.2e})",
                reports.len(),
                battery.len()
            )
        } else {
            failed.join("; ")
        },
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let s = Instant::now();
    let v = f();
    (v, s.elapsed().as_secs_f64())
}

fn main() -> ExitCode {
    let mut ok = true;
    let (o, s) = timed(laplace);
    let o = Outcome {
        passed: o.passed && s <= 60.0,
        ..o
    };
    ok &= report(1, "Laplace transform of K", &o, s);
    let (o, s) = timed(mass);
    ok &= report(2, "mass identities", &o, s);
    let (o, s) = timed(residual);
    ok &= report(3, "fundamental solution residual", &o, s);
    let (o, s) = timed(bounds);
    ok &= report(4, "kernel and mass bounds", &o, s);
    let ((o, c5), s) = timed(contraction);
    ok &= report(5, "contraction rate", &o, s);
    let ((o, c6), s) = timed(explicit_linear);
    ok &= report(6, "linear solution vs finite differences", &o, s);
    let ((o, c7), s) = timed(fhn_pipeline);
    ok &= report(7, "FitzHugh-Nagumo pipeline vs finite differences", &o, s);
    let ((o, c8), s) = timed(wave);
    ok &= report(8, "traveling front", &o, s);
    let (o, s) = timed(|| apriori(&[&c5, &c6], &[&c7, &c8]));
    ok &= report(9, "a-priori estimates on criteria 5-8", &o, s);
    let (o, s) = timed(degenerate);
    ok &= report(10, "degenerate parameter battery", &o, s);
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
