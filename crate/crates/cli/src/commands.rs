use std::io::Write;
use std::path::Path;

use memdiff_core::convolve::{Field, Grid};
use memdiff_core::fhn::{
    front_position, solve_fhn, steady_states, traveling_wave, wave_profile, FHNParams, FhnSolution, Regime,
};
use memdiff_core::kernels::{self, abs_mass_bound, kernel_bound, Kernel, KernelPoint};
use memdiff_core::quadrature::QuadSpec;
use memdiff_core::solver::{contraction_theta, picard_solve, IVProblem, SolverConfig};
use memdiff_core::verify::{default_battery, degenerate_battery, full_battery, run_all, CheckKind, VerifyConfig};
use memdiff_core::{Error, ModelParams};
use serde_json::json;

use crate::{open_out, resolve, usage, Failure, FhnArgs, GridArgs, KernelArgs, ParamArgs, Settings, SolveArgs, VerifyArgs};

type Flags = Vec<(&'static str, Option<String>)>;

/// Shortest text that parses back to the same `f64`.
fn num(v: f64) -> String {
    if v == 0.0 || (1e-4..1e15).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn param_flags(p: &ParamArgs) -> Flags {
    vec![
        ("a", p.a.map(num)),
        ("b", p.b.map(num)),
        ("beta", p.beta.map(num)),
        ("eps", p.eps.map(num)),
    ]
}

fn grid_flags(g: &GridArgs) -> Flags {
    vec![
        ("x_min", g.x_min.clone()),
        ("x_max", g.x_max.clone()),
        ("t_end", g.t_end.map(num)),
        ("every", g.every.map(|v| v.to_string())),
        ("dt_max", g.dt_max.map(num)),
        ("block_steps", g.block_steps.map(|v| v.to_string())),
        ("tol", g.tol.map(num)),
        ("max_iters", g.max_iters.map(|v| v.to_string())),
    ]
}

fn params(s: &Settings) -> Result<ModelParams, Failure> {
    let p = ModelParams::new(s.f64("a").map_err(usage)?, s.f64("b").map_err(usage)?, s.f64("beta").map_err(usage)?, s.f64("eps").map_err(usage)?);
    Ok(p?)
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Config echo, result lines, then the CSV body.
fn write_csv(
    out: &mut dyn Write,
    s: &Settings,
    results: &[(&str, String)],
    columns: &[&str],
    rows: &[Vec<String>],
) -> Result<(), Failure> {
    out.write_all(s.header().as_bytes())?;
    for (k, v) in results {
        writeln!(out, "## {k} = {v}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(columns).map_err(|e| Failure::Usage(e.to_string()))?;
    for r in rows {
        w.write_record(r).map_err(|e| Failure::Usage(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn solver_config(s: &Settings, grid: Grid, theta: Option<f64>) -> Result<SolverConfig, Failure> {
    let t_end = s.f64("t_end").map_err(usage)?;
    let cfg = SolverConfig {
        fixpoint_tol: s.f64("tol").map_err(usage)?,
        max_iters: s.usize("max_iters").map_err(usage)?,
        dt_max: s.f64("dt_max").map_err(usage)?,
        block_steps: s.usize("block_steps").map_err(usage)?,
        ..SolverConfig::new(grid, t_end).with_theta(theta.unwrap_or(t_end))
    };
    cfg.validate()?;
    Ok(cfg)
}

fn every(s: &Settings) -> Result<usize, Failure> {
    match s.usize("every").map_err(usage)? {
        0 => Err(usage("`every` must be at least 1")),
        n => Ok(n),
    }
}

/// Indices `0, k, 2k, ...` plus the last one.
fn levels(count: usize, k: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..count).step_by(k).collect();
    if v.last() != Some(&(count - 1)) {
        v.push(count - 1);
    }
    v
}

/// Prints the residual history of a failed contraction to stderr.
fn convergence_failure(e: Error) -> Failure {
    if let Error::NonConvergence { block, residuals } = &e {
        eprintln!("residual history of block {block}:");
        for (i, r) in residuals.iter().enumerate() {
            eprintln!("  iteration {:>4}: {r:e}", i + 1);
        }
    }
    e.into()
}

const KERNEL_DEFAULTS: &[(&str, &str)] = &[
    ("a", "1"),
    ("b", "1"),
    ("beta", "1"),
    ("eps", "1"),
    ("which", "K"),
    ("x_min", "0"),
    ("x_max", "0"),
    ("nx", "1"),
    ("t_min", "1"),
    ("t_max", "1"),
    ("nt", "1"),
    ("rel_tol", "1e-9"),
    ("abs_tol", "1e-12"),
];

pub fn kernel(args: &KernelArgs) -> Result<(), Failure> {
    let mut flags = param_flags(&args.params);
    if let Some(x) = args.x {
        flags.extend([("x_min", Some(num(x))), ("x_max", Some(num(x))), ("nx", Some("1".into()))]);
    }
    if let Some(t) = args.t {
        flags.extend([("t_min", Some(num(t))), ("t_max", Some(num(t))), ("nt", Some("1".into()))]);
    }
    flags.extend([
        ("which", args.which.clone()),
        ("x_min", args.x_min.map(num)),
        ("x_max", args.x_max.map(num)),
        ("nx", args.nx.map(|v| v.to_string())),
        ("t_min", args.t_min.map(num)),
        ("t_max", args.t_max.map(num)),
        ("nt", args.nt.map(|v| v.to_string())),
        ("rel_tol", args.rel_tol.map(num)),
        ("abs_tol", args.abs_tol.map(num)),
    ]);
    let s = resolve("kernel", KERNEL_DEFAULTS, &args.io, &flags)?;

    let p = params(&s)?;
    let which: Vec<Kernel> = match s.get("which") {
        "all" => Kernel::ALL.to_vec(),
        w => vec![Kernel::parse(w).ok_or_else(|| usage(format!("`which` must be K, K1, K2 or all, got `{w}`")))?],
    };
    let f = |k: &str| s.f64(k).map_err(usage);
    let n = |k: &str| s.usize(k).map_err(usage);
    let (x_min, x_max, nx) = (f("x_min")?, f("x_max")?, n("nx")?);
    let (t_min, t_max, nt) = (f("t_min")?, f("t_max")?, n("nt")?);
    if nx == 0 || nt == 0 || x_max < x_min || t_max < t_min {
        return Err(usage("need nx, nt >= 1, x_min <= x_max and t_min <= t_max"));
    }
    if !(t_min > 0.0) {
        return Err(usage(format!("kernels need t > 0, got t_min = {t_min}")));
    }
    let quad = QuadSpec::with_tolerances(f("rel_tol")?, f("abs_tol")?);
    quad.validate()?;

    let mut rows = Vec::new();
    for &k in &which {
        for &t in &linspace(t_min, t_max, nt) {
            for &x in &linspace(x_min, x_max, nx) {
                let pt = KernelPoint::new(x, t);
                let v = kernels::kernel(k, pt, &p, &quad).map_err(|e| Failure::Numeric(format!("{} at x = {x}, t = {t}: {e}", k.name())))?;
                let bound = match k {
                    Kernel::K => kernel_bound(pt, &p),
                    _ => abs_mass_bound(k, t, &p),
                };
                rows.push(vec![k.name().to_string(), num(x), num(t), num(v.value), num(v.error_estimate), num(bound)]);
            }
        }
    }
    let mut out = open_out(&args.io)?;
    write_csv(&mut *out, &s, &[], &["kernel", "x", "t", "value", "error_estimate", "bound"], &rows)
}

const SOLVE_DEFAULTS: &[(&str, &str)] = &[
    ("a", "1"),
    ("b", "1"),
    ("beta", "1"),
    ("eps", "1"),
    ("g", "gaussian"),
    ("g_file", ""),
    ("g_amplitude", "1"),
    ("source", "zero"),
    ("source_coef", "0.5"),
    ("x_min", "-10"),
    ("x_max", "10"),
    ("nx", "201"),
    ("t_end", "1"),
    ("theta", "auto"),
    ("dt_max", "0.02"),
    ("block_steps", "16"),
    ("tol", "1e-10"),
    ("max_iters", "200"),
    ("every", "1"),
];

/// Samples `x,u` from a CSV file; the `x` column must be uniform.
pub(crate) fn read_samples(path: &Path) -> Result<Field, Failure> {
    let bad = |m: String| usage(format!("{}: {m}", path.display()));
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let (mut xs, mut us) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if i == 0 && rec.len() == 2 && &rec[0] == "x" {
            continue;
        }
        if rec.len() != 2 {
            return Err(bad(format!("record {}: expected 2 columns, got {}", i + 1, rec.len())));
        }
        let parse = |s: &str| s.parse::<f64>().ok().filter(|v| v.is_finite());
        match (parse(&rec[0]), parse(&rec[1])) {
            (Some(x), Some(u)) => {
                xs.push(x);
                us.push(u);
            }
            _ => return Err(bad(format!("record {}: not a pair of finite numbers", i + 1))),
        }
    }
    if xs.len() < 3 {
        return Err(bad(format!("need at least 3 samples, got {}", xs.len())));
    }
    let grid = Grid::new(xs[0], xs[xs.len() - 1], xs.len()).map_err(|e| bad(e.to_string()))?;
    for (i, &x) in xs.iter().enumerate() {
        if (x - grid.x(i)).abs() > 1e-9 * grid.dx.max(x.abs()) {
            return Err(bad(format!("x is not uniformly spaced at record {}", i + 1)));
        }
    }
    Field::new(grid, 0.0, us).map_err(|e| bad(e.to_string()))
}

pub fn solve(args: &SolveArgs) -> Result<(), Failure> {
    let mut flags = param_flags(&args.params);
    flags.extend(grid_flags(&args.grid));
    flags.extend([
        ("nx", args.nx.map(|v| v.to_string())),
        ("g", args.g.clone()),
        ("g_file", args.g_file.as_ref().map(|p| p.display().to_string())),
        ("g_amplitude", args.g_amplitude.map(num)),
        ("source", args.source.clone()),
        ("source_coef", args.source_coef.map(num)),
        ("theta", args.theta.clone()),
    ]);
    let s = resolve("solve", SOLVE_DEFAULTS, &args.io, &flags)?;

    let p = params(&s)?;
    let f = |k: &str| s.f64(k).map_err(usage);
    let grid = Grid::new(f("x_min")?, f("x_max")?, s.usize("nx").map_err(usage)?)?;
    let amp = f("g_amplitude")?;
    let c = f("source_coef")?;
    let samples = match s.get("g") {
        "file" => match s.get("g_file") {
            "" => return Err(usage("`g = file` needs `g_file`")),
            path => Some(read_samples(Path::new(path))?),
        },
        "gaussian" | "step" | "logistic" | "constant" => None,
        other => return Err(usage(format!("`g` must be gaussian, step, logistic, constant or file, got `{other}`"))),
    };
    let shape = s.get("g").to_string();
    let g = move |x: f64| -> f64 {
        match (&samples, shape.as_str()) {
            (Some(field), _) => field.sample(x),
            (None, "gaussian") => amp * (-x * x).exp(),
            (None, "step") => {
                if x < 0.0 {
                    amp
                } else {
                    0.0
                }
            }
            (None, "logistic") => amp / (1.0 + x.exp()),
            _ => amp,
        }
    };
    let sup_g = grid.points().fold(0.0f64, |m, x| m.max(g(x).abs()));
    let (prob, cf) = match s.get("source") {
        "zero" => (IVProblem::linear(p, g, |_, _| 0.0, 0.0, sup_g)?, 0.0),
        "cosine" => (IVProblem::linear(p, g, move |x, t| c * (-t).exp() * x.cos(), c.abs(), sup_g)?, 0.0),
        "damping" => (IVProblem::new(p, g, move |_, _, u| -c * u, c.abs(), c.abs() * sup_g, sup_g)?, c.abs()),
        other => return Err(usage(format!("`source` must be zero, cosine or damping, got `{other}`"))),
    };
    let t_end = f("t_end")?;
    let theta = match s.f64_or_auto("theta").map_err(usage)? {
        Some(th) => th,
        None => contraction_theta(cf, &p, 0.5, t_end),
    };
    let cfg = solver_config(&s, grid, Some(theta))?;
    let k = every(&s)?;

    let sol = picard_solve(&prob, &cfg).map_err(convergence_failure)?;
    let mut rows = Vec::new();
    for i in levels(sol.slab.fields.len(), k) {
        let fld = &sol.slab.fields[i];
        for (x, u) in grid.points().zip(&fld.values) {
            rows.push(vec![num(fld.t), num(x), num(*u)]);
        }
    }
    let results = [
        ("dt", num(sol.dt)),
        ("theta", num(sol.theta)),
        ("blocks", sol.block_starts.len().to_string()),
        ("iterations", sol.iterations_per_block.iter().sum::<usize>().to_string()),
        ("max_residual", num(sol.residuals.iter().fold(0.0f64, |m, r| m.max(*r)))),
    ];
    let mut out = open_out(&args.io)?;
    write_csv(&mut *out, &s, &results, &["t", "x", "u"], &rows)
}

fn fhn_defaults(scenario: &str) -> Vec<(&'static str, &'static str)> {
    let mut d = vec![
        ("scenario", "pulse"),
        ("a", "0.25"),
        ("b", "1"),
        ("beta", "10"),
        ("eps", "1"),
        ("amplitude", "0.1"),
        ("x_min", "-8"),
        ("x_max", "8"),
        ("dx", "0.2"),
        ("t_end", "2"),
        ("every", "1"),
        ("dt_max", "0.02"),
        ("block_steps", "4"),
        ("tol", "1e-10"),
        ("max_iters", "200"),
    ];
    let over: &[(&str, &str)] = match scenario {
        "wave" => &[
            ("scenario", "wave"),
            ("b", "0"),
            ("beta", "1"),
            ("eps", "0.5"),
            ("x_min", "auto"),
            ("x_max", "auto"),
            ("dx", "0.05"),
            ("t_end", "1"),
        ],
        "steady" => &[("scenario", "steady"), ("x_min", "-4"), ("x_max", "4"), ("dx", "0.5"), ("t_end", "1")],
        _ => &[],
    };
    for (k, v) in over {
        if let Some(slot) = d.iter_mut().find(|(dk, _)| dk == k) {
            slot.1 = v;
        }
    }
    d
}

fn max_dev(f: &Field, c: f64) -> f64 {
    f.values.iter().fold(0.0f64, |m, v| m.max((v - c).abs()))
}

pub fn fhn(args: &FhnArgs) -> Result<(), Failure> {
    // The scenario picks the defaults, so find it first.
    let scenario = match (&args.scenario, &args.io.config) {
        (Some(sc), _) => sc.clone(),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            let entries = crate::parse_flat(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            entries.get("scenario").cloned().unwrap_or_else(|| "pulse".into())
        }
        (None, None) => "pulse".into(),
    };
    if !matches!(scenario.as_str(), "pulse" | "wave" | "steady") {
        return Err(usage(format!("scenario must be pulse, wave or steady, got `{scenario}`")));
    }
    let mut flags = param_flags(&args.params);
    flags.extend(grid_flags(&args.grid));
    flags.extend([
        ("scenario", args.scenario.clone()),
        ("dx", args.dx.map(num)),
        ("amplitude", args.amplitude.map(num)),
    ]);
    let s = resolve("fhn", &fhn_defaults(&scenario), &args.io, &flags)?;

    let q = params(&s)?;
    let fp = FHNParams::new(q.a, q.b, q.beta, q.eps)?;
    let f = |k: &str| s.f64(k).map_err(usage);
    let dx = f("dx")?;
    let (lo, hi) = (s.f64_or_auto("x_min").map_err(usage)?, s.f64_or_auto("x_max").map_err(usage)?);
    let tw = traveling_wave(&fp);
    let half = 20.0 / tw.gamma + tw.c.abs() + 2.0;
    let grid = Grid::with_spacing(lo.unwrap_or(-half), hi.unwrap_or(half), dx)?;
    let cfg = solver_config(&s, grid, None)?;
    let k = every(&s)?;

    let mut results: Vec<(&str, String)> = Vec::new();
    let (u0, v0) = match scenario.as_str() {
        "wave" => {
            if q.b != 0.0 {
                return Err(usage(format!("the wave scenario needs b = 0, got b = {}", q.b)));
            }
            (Field::from_fn(grid, 0.0, |x| wave_profile(x, &tw)), Field::zeros(grid, 0.0))
        }
        "steady" => {
            let st = steady_states(&fp)?;
            let (Regime::Tri, Some(ub), Some(vb)) = (st.regime, st.u_b, st.v_b) else {
                return Err(usage("the steady scenario needs three steady states, (1-a)^2 > 4b/beta"));
            };
            results.push(("u_b", num(ub)));
            results.push(("v_b", num(vb)));
            (Field::from_fn(grid, 0.0, |_| ub), Field::from_fn(grid, 0.0, |_| vb))
        }
        _ => {
            let amp = f("amplitude")?;
            (Field::from_fn(grid, 0.0, |x| amp * (-x * x).exp()), Field::zeros(grid, 0.0))
        }
    };

    let sol: FhnSolution = solve_fhn(&u0, &v0, &fp, &cfg).map_err(convergence_failure)?;
    let last = sol.states.last().expect("at least one level");
    match scenario.as_str() {
        "wave" => {
            let x0 = front_position(&sol.states[0].u, 0.5);
            let x1 = front_position(&last.u, 0.5);
            let (Some(x0), Some(x1)) = (x0, x1) else {
                return Err(Failure::Numeric("front left the grid".into()));
            };
            let speed = (x1 - x0) / last.u.t;
            eprintln!("front speed {speed:.6}, predicted {:.6} ({:.3}% off)", tw.c, 100.0 * (speed - tw.c).abs() / tw.c.abs());
            results.push(("front_speed", num(speed)));
            results.push(("predicted_speed", num(tw.c)));
        }
        "steady" => {
            let (ub, vb) = (u0.values[0], v0.values[0]);
            let drift = sol.states.iter().fold(0.0f64, |m, st| m.max(max_dev(&st.u, ub)).max(max_dev(&st.v, vb)));
            eprintln!("max drift from (u_B, v_B) = ({ub:.7}, {vb:.7}): {drift:e}");
            results.push(("max_drift", num(drift)));
        }
        _ => {
            let sups: Vec<f64> = sol.states.iter().map(|st| st.u.sup_norm()).collect();
            eprintln!("sup|u|: {} at t = 0, {} at t = {}", sups[0], sups[sups.len() - 1], last.u.t);
            results.push(("sup_u_final", num(sups[sups.len() - 1])));
        }
    }
    results.push(("route_gap", num(sol.route_gap)));
    results.push(("dt", num(sol.solve.dt)));
    results.push(("theta", num(sol.solve.theta)));

    let mut rows = Vec::new();
    for i in levels(sol.states.len(), k) {
        let st = &sol.states[i];
        for ((x, u), v) in grid.points().zip(&st.u.values).zip(&st.v.values) {
            rows.push(vec![num(st.u.t), num(x), num(*u), num(*v)]);
        }
    }
    let mut out = open_out(&args.io)?;
    write_csv(&mut *out, &s, &results, &["t", "x", "u", "v"], &rows)
}

const VERIFY_DEFAULTS: &[(&str, &str)] = &[("battery", "default"), ("samples", "200"), ("seed", "24301")];

pub fn verify(args: &VerifyArgs) -> Result<(), Failure> {
    let flags: Flags = vec![
        ("battery", args.battery.clone()),
        ("samples", args.samples.map(|v| v.to_string())),
        ("seed", args.seed.map(|v| v.to_string())),
    ];
    let s = resolve("verify", VERIFY_DEFAULTS, &args.io, &flags)?;
    let battery = match s.get("battery") {
        "default" => default_battery(),
        "degenerate" => degenerate_battery(),
        "full" => full_battery(),
        other => return Err(usage(format!("battery must be default, degenerate or full, got `{other}`"))),
    };
    let cfg = VerifyConfig {
        bound_samples: s.usize("samples").map_err(usage)?,
        seed: s.u64("seed").map_err(usage)?,
        ..VerifyConfig::default()
    };
    if cfg.bound_samples == 0 {
        return Err(usage("`samples` must be at least 1"));
    }

    let reports = run_all(&battery, &cfg);
    let mut out = open_out(&args.io)?;
    for r in &reports {
        let line = json!({
            "name": r.name,
            "kind": match r.kind { CheckKind::Identity => "identity", CheckKind::Bound => "bound" },
            "params": { "a": r.params.a, "b": r.params.b, "beta": r.params.beta, "eps": r.params.eps },
            "margin": r.margin,
            "tolerance": r.tolerance,
            "passed": r.passed,
            "inconclusive": r.inconclusive,
            "note": r.note,
        });
        writeln!(out, "{line}")?;
        eprintln!(
            "{:<30} a={:<4} b={:<4} beta={:<4} eps={:<4} margin {:>10.3e} tol {:.0e} {}",
            r.name,
            r.params.a,
            r.params.b,
            r.params.beta,
            r.params.eps,
            r.margin,
            r.tolerance,
            if r.passed { "ok" } else { "FAILED" }
        );
    }
    out.flush()?;
    let failed = reports.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(Failure::Numeric(format!("{failed} of {} checks failed", reports.len())));
    }
    Ok(())
}
