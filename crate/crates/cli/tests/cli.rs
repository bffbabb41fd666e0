use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use memdiff::Settings;
use memdiff_core::convolve::Grid;
use memdiff_core::kernels::{kernel, psi, Kernel, KernelPoint};
use memdiff_core::oracle::{fd_solve_p0, FDConfig};
use memdiff_core::quadrature::QuadSpec;
use memdiff_core::solver::{linear_solve, SolverConfig};
use memdiff_core::ModelParams;

fn memdiff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_memdiff")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// CSV body rows, header comments skipped.
fn rows(text: &str) -> Vec<Vec<String>> {
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    rdr.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect()
}

fn result(text: &str, key: &str) -> f64 {
    let prefix = format!("## {key} = ");
    text.lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no {key} line"))
        .parse()
        .unwrap()
}

fn col(r: &[String], i: usize) -> f64 {
    r[i].parse().unwrap()
}

fn p(a: f64, b: f64, beta: f64, eps: f64) -> ModelParams {
    ModelParams::new(a, b, beta, eps).unwrap()
}

#[test]
fn kernel_single_point() {
    let o = memdiff(&["kernel", "--which", "K", "--a", "1", "--b", "1", "--beta", "1", "--eps", "1", "--x", "0", "--t", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let r = rows(&text);
    assert_eq!(r.len(), 1);
    assert_eq!(r[0][0], "K");
    let v = kernel(Kernel::K, KernelPoint::new(0.0, 1.0), &p(1.0, 1.0, 1.0, 1.0), &QuadSpec::default()).unwrap();
    assert_eq!(col(&r[0], 3), v.value);
    assert!(col(&r[0], 3).abs() <= col(&r[0], 5));
}

#[test]
fn kernel_without_memory_is_psi() {
    let o = memdiff(&["kernel", "--which", "K", "--b", "0", "--a", "0.7", "--x-min", "-2", "--x-max", "2", "--nx", "9", "--t", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 9);
    let q = p(0.7, 0.0, 1.0, 1.0);
    for row in &r {
        let want = psi(KernelPoint::new(col(row, 1), col(row, 2)), &q).unwrap().value;
        assert!((col(row, 3) - want).abs() <= 1e-15 * want, "{row:?} vs {want}");
        assert_eq!(col(row, 3), col(row, 5));
    }
}

#[test]
fn kernel_sweep_within_budget() {
    let start = Instant::now();
    let o = memdiff(&["kernel", "--x-min", "-5", "--x-max", "5", "--nx", "101", "--t-min", "0.1", "--t-max", "2", "--nt", "10"]);
    let secs = start.elapsed().as_secs_f64();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(rows(&stdout(&o)).len(), 1010);
    assert!(secs < 10.0, "{secs} s");
}

#[test]
fn all_kernels_share_one_table() {
    let o = memdiff(&["kernel", "--which", "all", "--x", "0.3", "--t-min", "0.5", "--t-max", "1", "--nt", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let names: Vec<String> = rows(&stdout(&o)).into_iter().map(|r| r[0].clone()).collect();
    assert_eq!(names, ["K", "K", "K1", "K1", "K2", "K2"]);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(memdiff(&["kernel", "--bogus"]).status.code(), Some(2));
    assert_eq!(memdiff(&["kernel", "--t", "0"]).status.code(), Some(2));
    assert_eq!(memdiff(&["kernel", "--which", "K3"]).status.code(), Some(2));
    assert_eq!(memdiff(&["kernel", "--eps", "-1"]).status.code(), Some(2));
    assert_eq!(memdiff(&["solve", "--g", "triangle"]).status.code(), Some(2));
    assert_eq!(memdiff(&["solve", "--F", "cubic"]).status.code(), Some(2));
    assert_eq!(memdiff(&["kernel", "--config", "/nonexistent/memdiff.conf"]).status.code(), Some(2));
    assert_eq!(memdiff(&["nonsense"]).status.code(), Some(2));
}

#[test]
fn unknown_config_key_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "a = 1\nzeta = 3\n").unwrap();
    let o = memdiff(&["kernel", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("zeta"));
}

#[test]
fn config_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    let out1 = dir.path().join("one.csv");
    let out2 = dir.path().join("two.csv");
    fs::write(&cfg, "# kernels on a line\na = 0.5\nb = 2\nwhich = all\nx_min = -1\nx_max = 1\nnx = 5\nt_min = 0.25\n").unwrap();
    let o = memdiff(&["kernel", "--config", cfg.to_str().unwrap(), "--out", out1.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&out1).unwrap();
    let echoed = Settings::from_header(&text).unwrap();
    assert_eq!(echoed.command, "kernel");
    let original = memdiff::parse_flat(&fs::read_to_string(&cfg).unwrap()).unwrap();
    for (k, v) in &original {
        assert_eq!(echoed.entries().get(k), Some(v), "{k}");
    }

    // The echoed header is itself a config that reproduces the run.
    let header: String = text
        .lines()
        .skip(1)
        .take_while(|l| l.starts_with("# "))
        .map(|l| format!("{}\n", &l[2..]))
        .collect();
    let cfg2 = dir.path().join("echo.conf");
    fs::write(&cfg2, header).unwrap();
    let o = memdiff(&["kernel", "--config", cfg2.to_str().unwrap(), "--out", out2.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read(&out1).unwrap(), fs::read(&out2).unwrap());
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "a = 0.5\nwhich = K1\n").unwrap();
    let o = memdiff(&["kernel", "--config", cfg.to_str().unwrap(), "--a", "2"]);
    let s = Settings::from_header(&stdout(&o)).unwrap();
    assert_eq!(s.get("a"), "2");
    assert_eq!(s.get("which"), "K1");
}

#[test]
fn identical_runs_are_bit_identical() {
    let args = ["solve", "--F", "damping", "--g", "logistic", "--nx", "81", "--t-end", "0.5"];
    let a = memdiff(&args);
    let b = memdiff(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn solve_matches_finite_differences() {
    let o = memdiff(&["solve", "--F", "zero", "--g", "gaussian", "--x-min", "-10", "--x-max", "10", "--nx", "201", "--t-end", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&stdout(&o));
    let last: Vec<&Vec<String>> = r.iter().filter(|row| col(row, 0) == 1.0).collect();
    assert_eq!(last.len(), 201);

    let q = p(1.0, 1.0, 1.0, 1.0);
    let wide = Grid::new(-15.0, 15.0, 601).unwrap();
    let fd = fd_solve_p0(&|x| (-x * x).exp(), &|_, _, _| 0.0, &q, &FDConfig::new(wide, 1.0, 1.0, 1)).unwrap();
    let reference = &fd.u.fields.last().unwrap().values;
    let err = last
        .iter()
        .enumerate()
        .fold(0.0f64, |m, (i, row)| m.max((col(row, 2) - reference[100 + 2 * i]).abs()));
    assert!(err <= 1e-3, "{err}");
}

#[test]
fn cosine_source_runs_the_explicit_solution() {
    let o = memdiff(&["solve", "--F", "cosine", "--source-coef", "1", "--nx", "101", "--x-min", "-5", "--x-max", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&stdout(&o));
    let grid = Grid::new(-5.0, 5.0, 101).unwrap();
    let sol = linear_solve(&p(1.0, 1.0, 1.0, 1.0), |x| (-x * x).exp(), |x, t| (-t).exp() * x.cos(), &SolverConfig::new(grid, 1.0)).unwrap();
    let mut n = 0;
    for f in &sol.slab.fields {
        for (i, u) in f.values.iter().enumerate() {
            assert_eq!(col(&r[n], 0), f.t);
            assert_eq!(col(&r[n], 1), grid.x(i));
            assert_eq!(col(&r[n], 2), *u);
            n += 1;
        }
    }
    assert_eq!(n, r.len());
}

fn write_samples(path: &Path, xs: impl Iterator<Item = f64>, f: impl Fn(f64) -> f64) {
    let mut s = String::from("x,u\n");
    for x in xs {
        s.push_str(&format!("{x},{}\n", f(x)));
    }
    fs::write(path, s).unwrap();
}

#[test]
fn sampled_initial_datum() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("g.csv");
    write_samples(&file, (0..=400).map(|i| -10.0 + 0.05 * i as f64), |x| (-x * x).exp());
    let common = ["solve", "--nx", "101", "--t-end", "0.5", "--every", "1000"];
    let from_file = memdiff(&[&common[..], &["--g", "file", "--g-file", file.to_str().unwrap()]].concat());
    let built_in = memdiff(&[&common[..], &["--g", "gaussian"]].concat());
    assert_eq!(from_file.status.code(), Some(0));
    let (a, b) = (rows(&stdout(&from_file)), rows(&stdout(&built_in)));
    assert_eq!(a.len(), b.len());
    let err = a.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max((col(x, 2) - col(y, 2)).abs()));
    assert!(err < 1e-3, "{err}");
}

#[test]
fn malformed_sample_files_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "x,u\n0,1\n1,oops\n2,3\n").unwrap();
    let o = memdiff(&["solve", "--g", "file", "--g-file", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let uneven = dir.path().join("uneven.csv");
    fs::write(&uneven, "0,1\n1,1\n3,1\n4,1\n").unwrap();
    assert_eq!(memdiff(&["solve", "--g", "file", "--g-file", uneven.to_str().unwrap()]).status.code(), Some(2));

    assert_eq!(memdiff(&["solve", "--g", "file"]).status.code(), Some(2));
}

#[test]
fn non_convergence_exit_1_with_history() {
    let o = memdiff(&["solve", "--F", "damping", "--max-iters", "2", "--nx", "41"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("residual history"), "{err}");
    assert!(err.contains("iteration    2"), "{err}");
}

#[test]
fn fhn_wave_speed() {
    let o = memdiff(&["fhn", "wave", "--eps", "0.5", "--a", "0.25"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let speed = result(&text, "front_speed");
    assert_eq!(result(&text, "predicted_speed"), 0.25);
    assert!((speed - 0.25).abs() <= 0.02 * 0.25, "{speed}");
}

#[test]
fn fhn_steady_state_holds() {
    let o = memdiff(&["fhn", "steady"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(result(&text, "max_drift") <= 1e-4);
    let (ub, vb) = (result(&text, "u_b"), result(&text, "v_b"));
    for r in rows(&text) {
        assert!((col(&r, 2) - ub).abs() <= 1e-4 && (col(&r, 3) - vb).abs() <= 1e-4);
    }
}

#[test]
fn fhn_subthreshold_pulse_decays() {
    let o = memdiff(&["fhn", "pulse", "--amplitude", "0.1", "--dx", "0.4", "--t-end", "1.5"]);
    assert_eq!(o.status.code(), Some(0));
    let mut sup: Vec<(f64, f64)> = Vec::new();
    for r in rows(&stdout(&o)) {
        let (t, u) = (col(&r, 0), col(&r, 2).abs());
        match sup.last_mut() {
            Some((lt, m)) if *lt == t => *m = m.max(u),
            _ => sup.push((t, u)),
        }
    }
    let start = sup.windows(2).position(|w| w[1].1 < w[0].1).expect("sup|u| starts to fall");
    for w in sup[start..].windows(2) {
        assert!(w[1].1 <= w[0].1 + 1e-12, "{w:?}");
    }
    assert!(sup.last().unwrap().1 < 0.5 * sup[0].1);
}

#[test]
fn fhn_bad_configs_exit_2() {
    assert_eq!(memdiff(&["fhn", "wave", "--b", "0.5"]).status.code(), Some(2));
    assert_eq!(memdiff(&["fhn", "spiral"]).status.code(), Some(2));
    assert_eq!(memdiff(&["fhn", "steady", "--b", "1", "--beta", "1"]).status.code(), Some(2));
    assert_eq!(memdiff(&["fhn", "pulse", "--a", "1.5"]).status.code(), Some(2));
}

#[test]
fn verify_default_battery() {
    let o = memdiff(&["verify", "--battery", "default"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 3 * memdiff_core::verify::MANIFEST.len());
    for v in &lines {
        for key in ["name", "params", "margin", "tolerance", "passed"] {
            assert!(v.get(key).is_some(), "{key} missing in {v}");
        }
        assert_eq!(v["passed"], true);
    }
}

#[test]
fn verify_degenerate_battery() {
    let o = memdiff(&["verify", "--battery", "degenerate"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let a_eq_beta = text.lines().any(|l| l.contains("\"a\":0.5") && l.contains("\"beta\":0.5"));
    assert!(a_eq_beta);
}

#[test]
fn verify_unknown_battery_exit_2() {
    assert_eq!(memdiff(&["verify", "--battery", "huge"]).status.code(), Some(2));
}
