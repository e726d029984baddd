//! Acceptance criteria 1–7, run in order with one PASS/FAIL line each.
//! Exits nonzero when any criterion fails.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rppm::harness::{
    execute, run_comparison, ExperimentConfig, ExperimentOutput, PerfProfile, SOLVED_DET_TOL,
};
use rppm::manifold::*;
use rppm::problems::*;
use rppm::solvers::*;

const ROUNDTRIP_TOL: f64 = 1e-8;
const ISOMETRY_TOL: f64 = 1e-10;
const COMPARISON_SLACK: f64 = -1e-9;
const MANIFOLD_INSTANCES: usize = 240;
const GRADIENT_TOL: f64 = 1e-5;
const GRADIENT_SAMPLES: usize = 50;
const FD_STEP: f64 = 1e-6;
const CRITICAL_DIST_TOL: f64 = 1e-5;
const F1_MAX_OUTER: usize = 100;
const COMPLEXITY_EPS: f64 = 1e-3;
const F2_DET_TOL: f64 = 1e-2;
const F2_REFERENCE_DET: f64 = 1.756;
const F2_ORACLE_TOL: f64 = 1e-12;
const F2_MAX_OUTER: usize = 50_000;
const F3_DET_TOL: f64 = 1e-3;
const COINCIDE_TOL: f64 = 1e-12;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn within(elapsed: Duration, secs: u64) -> bool {
    elapsed <= Duration::from_secs(secs)
}

fn frob(m: &Mat) -> f64 {
    m.norm()
}

fn criterion_1() -> Verdict {
    let started = Instant::now();
    let mut r = ChaCha8Rng::seed_from_u64(1);
    let (mut roundtrip, mut isometry, mut slack) = (0.0f64, 0.0f64, f64::INFINITY);
    for i in 0..MANIFOLD_INSTANCES {
        let n = [2, 5, 10, 20][i % 4];
        let x = random_point(n, &mut r);
        let y = random_point(n, &mut r);
        let z = random_point(n, &mut r);

        let back = exp_map(&x, &log_map(&x, &y).unwrap()).unwrap();
        roundtrip = roundtrip.max(frob(&(back.mat() - y.mat())) / frob(y.mat()));
        let u = random_tangent(&x, &mut r);
        let u = u.scaled(2.0 / norm(&u));
        let w = log_map(&x, &exp_map(&x, &u).unwrap()).unwrap();
        roundtrip = roundtrip.max(frob(&(w.vec() - u.vec())) / frob(u.vec()));

        let v = random_tangent(&x, &mut r);
        let (tu, tv) = (parallel_transport(&u, &y).unwrap(), parallel_transport(&v, &y).unwrap());
        let gap = (inner(&u, &v).unwrap() - inner(&tu, &tv).unwrap()).abs() / (norm(&u) * norm(&v));
        isometry = isometry.max(gap);

        let (lz, ly) = (log_map(&x, &z).unwrap(), log_map(&x, &y).unwrap());
        let lhs = distance(&z, &x).unwrap().powi(2) + distance(&x, &y).unwrap().powi(2)
            - 2.0 * inner(&lz, &ly).unwrap();
        let rhs = distance(&z, &y).unwrap().powi(2);
        slack = slack.min((rhs - lhs) / rhs.max(1.0));
    }
    let elapsed = started.elapsed();
    verdict(
        roundtrip < ROUNDTRIP_TOL && isometry < ISOMETRY_TOL && slack >= COMPARISON_SLACK && within(elapsed, 30),
        format!(
            "{MANIFOLD_INSTANCES} instances, roundtrip {roundtrip:.1e}, isometry {isometry:.1e}, \
             comparison slack {slack:.1e}, {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

type Grad = fn(&DcProblem, &SpdPoint) -> TangentVector;
type Value = fn(&DcProblem, &SpdPoint) -> f64;

fn criterion_2() -> Verdict {
    let started = Instant::now();
    let parts: [(&str, Value, Grad); 3] = [
        ("g1", DcProblem::eval_g1, |p, x| p.rgrad_g1(x).unwrap()),
        ("g2", DcProblem::eval_g2, DcProblem::rgrad_g2),
        ("h", DcProblem::eval_h, DcProblem::subgrad_h),
    ];
    let mut r = ChaCha8Rng::seed_from_u64(2);
    let mut worst = (0.0f64, String::new());
    let mut checked = 0;
    for name in ["f1", "f2", "f3"] {
        for (part, value, grad) in parts {
            for i in 0..GRADIENT_SAMPLES {
                let n = [2, 5, 10][i % 3];
                let p = make_problem(name, n, 0.5, 0.01).unwrap();
                let x = if name == "f1" {
                    random_point(n, &mut r)
                } else {
                    // moderate log det keeps the quartic profiles well scaled
                    let id = SpdPoint::identity(n);
                    let v = random_tangent(&id, &mut r);
                    exp_map(&id, &v.scaled(1.5 / norm(&v))).unwrap()
                };
                let v = random_tangent(&x, &mut r);
                let at = |t: f64| value(&p, &exp_map(&x, &v.scaled(t)).unwrap());
                let fd = (at(FD_STEP) - at(-FD_STEP)) / (2.0 * FD_STEP);
                let g = grad(&p, &x);
                let err = (fd - inner(&g, &v).unwrap()).abs() / (norm(&g) * norm(&v)).max(1e-8);
                if err > worst.0 {
                    worst = (err, format!("{name}.{part}"));
                }
                checked += 1;
            }
        }
    }
    let mut r = ChaCha8Rng::seed_from_u64(22);
    for i in 0..GRADIENT_SAMPLES {
        let n = [2, 5, 10][i % 3];
        let (x, y) = (random_point(n, &mut r), random_point(n, &mut r));
        let v = random_tangent(&x, &mut r);
        let at = |t: f64| 0.5 * distance(&exp_map(&x, &v.scaled(t)).unwrap(), &y).unwrap().powi(2);
        let fd = (at(FD_STEP) - at(-FD_STEP)) / (2.0 * FD_STEP);
        let g = grad_half_sq_dist(&x, &y).unwrap();
        let err = (fd - inner(&g, &v).unwrap()).abs() / (norm(&g) * norm(&v));
        if err > worst.0 {
            worst = (err, "half_sq_dist".into());
        }
        checked += 1;
    }
    let elapsed = started.elapsed();
    verdict(
        worst.0 < GRADIENT_TOL && within(elapsed, 60),
        format!(
            "{checked} geodesic central differences, worst relative error {:.1e} ({}), {:.1}s",
            worst.0,
            worst.1,
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_3() -> Verdict {
    let started = Instant::now();
    let n = 10;
    let p = make_f1(n, 0.5, 0.01).unwrap();
    let target = f1_critical_point(n, 0.5, 0.01).unwrap();
    let x0 = SpdPoint::scaled_identity(n, (n as f64).ln());
    let l = p.lipschitz_l().unwrap();
    let mut configs = vec![MethodConfig::Rppm(RppmConfig {
        lambda0: 1.01 * l,
        eps_stop: 1e-8,
        max_outer: F1_MAX_OUTER,
        ..Default::default()
    })];
    for l0 in [1e-4, 1e-3, 1e-2, 1e-1, 1.0] {
        configs.push(MethodConfig::Adap(AdapConfig {
            lambda0: l0,
            eps_stop: 1e-8,
            max_outer: F1_MAX_OUTER,
            ..Default::default()
        }));
    }
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for cfg in &configs {
        let run = run(&p, &x0, cfg);
        let d = distance(&run.x_final, &target).unwrap();
        let violations = check_invariants(&p, &run, cfg);
        let tag = format!("{}@{:e}", cfg.method(), cfg.lambda0(Some(l)));
        summary.push(format!("{tag}:{}", run.iterations));
        if run.termination != Termination::StepTol || d > CRITICAL_DIST_TOL || !violations.is_empty() {
            failures.push(format!("{tag} {} d={d:.1e} violations={}", run.termination, violations.len()));
        }
    }
    let elapsed = started.elapsed();
    let pass = failures.is_empty() && within(elapsed, 120);
    let detail = if failures.is_empty() {
        format!("iterations {}, {:.1}s", summary.join(" "), elapsed.as_secs_f64())
    } else {
        failures.join("; ")
    };
    verdict(pass, detail)
}

fn violations_of(out: &ExperimentOutput) -> Vec<String> {
    out.records
        .iter()
        .flat_map(|r| r.violations.iter().map(move |v| format!("{}/{}: {v}", r.case_id, r.method)))
        .collect()
}

fn criterion_4() -> Verdict {
    let started = Instant::now();
    let mut violations = Vec::new();
    let mut runs = 0;

    let mut benchmarks = vec![
        ExperimentConfig::lambda_sensitivity(),
        ExperimentConfig::scaling(false),
        ExperimentConfig::comparison(false),
    ];
    // the same experiments at the coarse tolerance used for the iteration caps
    let coarse: Vec<_> = benchmarks
        .iter()
        .map(|c| ExperimentConfig { eps_stop: COMPLEXITY_EPS, ..c.clone() })
        .collect();
    benchmarks.extend(coarse);
    let mut rppm = ExperimentConfig::lambda_sensitivity();
    rppm.methods = vec![Method::Rppm];
    rppm.lambda0_grid = vec![1.01, 1.5, 2.0];
    rppm.eps_stop = COMPLEXITY_EPS;
    benchmarks.push(rppm);

    for cfg in &benchmarks {
        let out = execute(cfg).unwrap();
        runs += out.records.len();
        violations.extend(violations_of(&out));
        if cfg.eps_stop == COMPLEXITY_EPS {
            // explicit cap check, independent of the solver-side checker
            let problem = cfg.problem.build(cfg.n_grid[0]).unwrap();
            for (rec, run) in out.records.iter().zip(&out.runs) {
                let (Some(run), Some(f_low)) = (run, problem.f_low_hint()) else { continue };
                let l = problem.lipschitz_l();
                let Ok(cap) = complexity_bound(rec.method, run.f0, f_low, rec.lambda0, l, COMPLEXITY_EPS) else {
                    continue;
                };
                let count = large_step_count(run, COMPLEXITY_EPS);
                if count as f64 > cap {
                    violations.push(format!("{}/{}: {count} large steps > cap {cap:.3e}", rec.case_id, rec.method));
                }
            }
        }
    }
    let elapsed = started.elapsed();
    let shown: Vec<_> = violations.iter().take(3).cloned().collect();
    verdict(
        violations.is_empty(),
        format!(
            "{runs} runs, {} violations{}{}, {:.1}s",
            violations.len(),
            if shown.is_empty() { "" } else { ": " },
            shown.join("; "),
            elapsed.as_secs_f64()
        ),
    )
}

/// Root of `t³ + 9t² − 3` in `[0, 1]` by bisection.
fn f2_oracle_log_det() -> f64 {
    let c = |t: f64| t * t * t + 9.0 * t * t - 3.0;
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > F2_ORACLE_TOL {
        let mid = 0.5 * (lo + hi);
        if c(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn criterion_5() -> Verdict {
    let started = Instant::now();
    let oracle = f2_oracle_log_det().exp();
    let reference_ok = (F2_REFERENCE_DET - oracle).abs() <= F2_DET_TOL;
    let mut results = Vec::new();
    let mut pass = reference_ok;
    for n in [10, 20, 40] {
        let p = make_f2(n).unwrap();
        let x0 = SpdPoint::scaled_identity(n, (n as f64).ln());
        let cfg = MethodConfig::Adap(AdapConfig {
            lambda0: 1e-4,
            eps_stop: 1e-8,
            max_outer: F2_MAX_OUTER,
            ..Default::default()
        });
        let run = run(&p, &x0, &cfg);
        let det = run.x_final.det();
        let ok = (det - oracle).abs() <= F2_DET_TOL;
        pass &= ok;
        results.push(format!("n={n} det {det:.4e} ({}, {} it){}", run.termination, run.iterations, if ok { "" } else { " MISS" }));
    }
    let elapsed = started.elapsed();
    pass &= within(elapsed, 180);
    verdict(
        pass,
        format!(
            "oracle e^t* = {oracle:.6}, reference {F2_REFERENCE_DET} {}; {}; {:.1}s",
            if reference_ok { "within 1e-2" } else { "outside 1e-2" },
            results.join(", "),
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_6() -> Verdict {
    let started = Instant::now();
    let dets = f3_stationary_dets();
    let mut cfg = ExperimentConfig::comparison(false);
    cfg.n_grid = vec![5, 10];
    let out = execute(&cfg).unwrap();
    let mut off_level = Vec::new();
    let mut step_tol = 0;
    for r in &out.records {
        if r.termination == Some(Termination::StepTol) {
            step_tol += 1;
            if !dets.iter().any(|d| (r.det_final - d).abs() <= F3_DET_TOL) {
                off_level.push(format!("{}/{} det {:.6}", r.case_id, r.method, r.det_final));
            }
        }
    }

    let lambda = cfg.lambda0_grid[0];
    let rppm_cfg = RppmConfig { lambda0: lambda, ..Default::default() };
    let dcppa_cfg = DcppaConfig { lambda, ..Default::default() };
    let mut worst = 0.0f64;
    let mut compared = 0;
    for n in [5, 10] {
        let p = make_f3(n).unwrap();
        for start in 0..cfg.starts_per_case {
            let seed = rppm::harness::case_seed(cfg.seed, &format!("n{n}-s{start}"));
            let x0 = random_point(n, &mut ChaCha8Rng::seed_from_u64(seed));
            let mut a = SolverState::new(&p, x0.clone(), lambda);
            let mut b = SolverState::new(&p, x0, lambda);
            for _ in 0..rppm_cfg.max_outer {
                let (ra, rb) = (rppm_step(&p, &mut a, &rppm_cfg), dcppa_step(&p, &mut b, &dcppa_cfg));
                if ra.is_err() || rb.is_err() {
                    worst = f64::INFINITY;
                    break;
                }
                worst = worst.max(distance(&a.x, &b.x).unwrap());
                compared += 1;
                if a.step_dist <= rppm_cfg.eps_stop {
                    break;
                }
            }
        }
    }
    let elapsed = started.elapsed();
    verdict(
        off_level.is_empty() && worst < COINCIDE_TOL && within(elapsed, 180),
        format!(
            "{step_tol}/{} runs stopped by step_tol, {} off the stationary levels{}; \
             DCPPA vs R-PPM max distance {worst:.1e} over {compared} iterates; {:.1}s",
            out.records.len(),
            off_level.len(),
            off_level.first().map(|s| format!(" (e.g. {s})")).unwrap_or_default(),
            elapsed.as_secs_f64()
        ),
    )
}

fn run_cli(dir: &Path, extra: &[&str]) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_rppm"))
        .args(["comparison", "--seed", "7", "--out"])
        .arg(dir)
        .args(extra)
        .env("NO_COLOR", "1")
        .output()
        .map_err(|e| e.to_string())?;
    match status.status.code() {
        Some(0) => Ok(()),
        code => Err(format!("exit {code:?}: {}", String::from_utf8_lossy(&status.stderr))),
    }
}

fn without_cpu_column(path: &Path) -> String {
    let text = fs::read_to_string(path).unwrap_or_default();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    let cpu = header.iter().position(|h| *h == "cpu_seconds");
    text.lines()
        .map(|line| {
            line.split(',')
                .enumerate()
                .filter(|(i, _)| Some(*i) != cpu)
                .map(|(_, f)| f)
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn profile_csv_valid(path: &Path) -> bool {
    let Ok(mut reader) = csv::Reader::from_path(path) else { return false };
    let rows: Vec<Vec<f64>> = reader
        .records()
        .filter_map(Result::ok)
        .map(|r| r.iter().map(|f| f.parse().unwrap_or(f64::NAN)).collect())
        .collect();
    if rows.is_empty() {
        return false;
    }
    let columns = rows[0].len();
    (1..columns).all(|c| {
        rows.iter().all(|r| (0.0..=1.0).contains(&r[c])) && rows.windows(2).all(|w| w[0][c] <= w[1][c])
    }) && rows.windows(2).all(|w| w[0][0] < w[1][0])
}

fn criterion_7() -> Verdict {
    let started = Instant::now();
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let runs = [
        run_cli(dirs[0].path(), &[]),
        run_cli(dirs[1].path(), &[]),
        run_cli(dirs[2].path(), &["--threads", "1"]),
    ];
    if let Some(Err(e)) = runs.iter().find(|r| r.is_err()) {
        return verdict(false, format!("comparison run failed: {e}"));
    }
    let summaries: Vec<_> = dirs.iter().map(|d| without_cpu_column(&d.path().join("summary.csv"))).collect();
    let identical = !summaries[0].is_empty() && summaries.iter().all(|s| *s == summaries[0]);
    let profiles_ok = dirs.iter().all(|d| {
        profile_csv_valid(&d.path().join("profile_time.csv"))
            && profile_csv_valid(&d.path().join("profile_iterations.csv"))
    });

    // the in-process profile satisfies the same checks
    let mut cfg = ExperimentConfig::comparison(false);
    cfg.seed = 7;
    let (_, profile): (_, PerfProfile) = run_comparison(&cfg).unwrap();
    let elapsed = started.elapsed();
    verdict(
        identical && profiles_ok && profile.is_valid(),
        format!(
            "summaries identical modulo cpu_seconds: {identical} (2 repeats + 1 single-thread); \
             profiles monotone in [0,1]: {}; solved tolerance {SOLVED_DET_TOL:e}; {:.1}s",
            profiles_ok && profile.is_valid(),
            elapsed.as_secs_f64()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 7] = [
        ("manifold properties", criterion_1),
        ("gradient oracles", criterion_2),
        ("f1 recovery", criterion_3),
        ("adaptive invariants and iteration caps", criterion_4),
        ("f2 stationarity", criterion_5),
        ("f3 multi-start", criterion_6),
        ("harness determinism", criterion_7),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        if !v.pass {
            failed += 1;
        }
        println!("criterion {} {name}: {} ({})", i + 1, if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
