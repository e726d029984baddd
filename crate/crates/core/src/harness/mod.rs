//! Benchmark experiments: λ₀ sensitivity on f1, dimension scaling on f2 and a
//! multi-start solver comparison on f3, with CSV and SVG artifacts.
//!
//! Cases run independently, optionally on a worker pool. Every case that
//! needs randomness seeds its own generator from `(seed, case_id)`, so serial
//! and parallel execution produce the same records. All files are written
//! after the runs finish.

mod output;
mod profile;

pub use output::{
    emit_convergence_svg, emit_csv, emit_profile_csv, emit_profile_svg, emit_scaling_svg,
    emit_trace_csv, SUMMARY_COLUMNS, TRACE_COLUMNS,
};
pub use profile::PerfProfile;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::manifold::{distance, random_point, SpdPoint};
use crate::problems::{make_problem, DcProblem, StationarySet};
use crate::solvers::{
    check_invariants, run, AdapConfig, DcaConfig, DcppaConfig, Method, MethodConfig, RppmConfig,
    SolverRun, Termination,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    LambdaSensitivity,
    Scaling,
    Comparison,
    Custom,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::LambdaSensitivity => "lambda_sensitivity",
            Self::Scaling => "scaling",
            Self::Comparison => "comparison",
            Self::Custom => "custom",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

/// A built-in problem by name, with the parameters only f1 uses.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub name: String,
    pub alpha: f64,
    pub mu: f64,
}

impl ProblemSpec {
    pub fn new(name: &str) -> Self {
        Self { name: name.to_string(), alpha: 0.5, mu: 0.01 }
    }

    pub fn build(&self, n: usize) -> Result<DcProblem, crate::problems::ProblemError> {
        make_problem(&self.name, n, self.alpha, self.mu)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub name: ExperimentKind,
    pub problem: ProblemSpec,
    pub methods: Vec<Method>,
    pub lambda0_grid: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub starts_per_case: usize,
    pub seed: u64,
    pub eps_stop: f64,
    pub max_outer: usize,
    pub output_dir: Option<PathBuf>,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

/// `λ₀` grid of the sensitivity study.
pub const LAMBDA0_GRID: [f64; 5] = [1e-4, 1e-3, 1e-2, 1e-1, 1.0];
/// Outer-iteration cap of the scaling study, whose larger sizes need
/// thousands of iterations at `λ₀ = 1e-4`.
pub const SCALING_MAX_OUTER: usize = 50_000;

impl ExperimentConfig {
    /// Adap-RPPM on f1 (`n = 10`, `α = 0.5`, `μ = 0.01`) over [`LAMBDA0_GRID`].
    pub fn lambda_sensitivity() -> Self {
        Self {
            name: ExperimentKind::LambdaSensitivity,
            problem: ProblemSpec::new("f1"),
            methods: vec![Method::Adap],
            lambda0_grid: LAMBDA0_GRID.to_vec(),
            n_grid: vec![10],
            starts_per_case: 1,
            seed: 0,
            eps_stop: 1e-8,
            max_outer: 100,
            output_dir: None,
            threads: None,
        }
    }

    /// Adap-RPPM on f2 with `λ₀ = 1e-4`; `n = 10, 15, …, 60`, or up to 100
    /// when `full`.
    pub fn scaling(full: bool) -> Self {
        let top = if full { 100 } else { 60 };
        Self {
            name: ExperimentKind::Scaling,
            problem: ProblemSpec::new("f2"),
            methods: vec![Method::Adap],
            lambda0_grid: vec![1e-4],
            n_grid: (10..=top).step_by(5).collect(),
            starts_per_case: 1,
            seed: 0,
            eps_stop: 1e-8,
            max_outer: SCALING_MAX_OUTER,
            output_dir: None,
            threads: None,
        }
    }

    /// Adap-RPPM, DCA and DCPPA on f3 from 10 random starts per size:
    /// 8 sizes, or 16 when `full`. DCPPA uses the same `λ` as Adap-RPPM's `λ₀`.
    pub fn comparison(full: bool) -> Self {
        let n_grid = if full {
            vec![2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 14, 16, 18, 20, 25, 30]
        } else {
            vec![2, 3, 4, 5, 6, 8, 10, 12]
        };
        Self {
            name: ExperimentKind::Comparison,
            problem: ProblemSpec::new("f3"),
            methods: vec![Method::Adap, Method::Dca, Method::Dcppa],
            lambda0_grid: vec![0.1],
            n_grid,
            starts_per_case: 10,
            seed: 0,
            eps_stop: 1e-8,
            max_outer: 100,
            output_dir: None,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.methods.is_empty() || self.lambda0_grid.is_empty() || self.n_grid.is_empty() {
            return bad("methods, lambda0_grid and n_grid must be nonempty");
        }
        if self.starts_per_case == 0 {
            return bad("starts_per_case must be at least 1");
        }
        if self.n_grid.contains(&0) {
            return bad("matrix sizes must be at least 1");
        }
        if self.problem.name != "f3" && self.n_grid.contains(&1) {
            return bad("the log(n) I start needs n >= 2");
        }
        if !self.lambda0_grid.iter().all(|l| l.is_finite() && *l > 0.0) {
            return bad("lambda0 values must be positive");
        }
        if !(self.eps_stop > 0.0) || self.max_outer == 0 {
            return bad("eps_stop and max_outer must be positive");
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1");
        }
        let required = match self.name {
            ExperimentKind::LambdaSensitivity => Some("f1"),
            ExperimentKind::Scaling => Some("f2"),
            ExperimentKind::Comparison => Some("f3"),
            ExperimentKind::Custom => None,
        };
        if let Some(p) = required {
            if self.problem.name != p {
                return Err(HarnessError::Config(format!(
                    "{} runs on {p}, not {}",
                    self.name, self.problem.name
                )));
            }
        }
        if self.name == ExperimentKind::Comparison
            && ![Method::Adap, Method::Dca, Method::Dcppa]
                .iter()
                .all(|m| self.methods.contains(m))
        {
            return bad("comparison needs at least adap, dca and dcppa");
        }
        Ok(())
    }

    /// The cases in output order.
    pub fn cases(&self) -> Vec<Case> {
        let mut out = Vec::new();
        for &n in &self.n_grid {
            for &lambda0 in &self.lambda0_grid {
                for start in 0..self.starts_per_case {
                    let id = self.case_id(n, lambda0, start);
                    let seed = case_seed(self.seed, &id);
                    for &method in &self.methods {
                        out.push(Case { id: id.clone(), n, method, lambda0, start, seed });
                    }
                }
            }
        }
        out
    }

    fn case_id(&self, n: usize, lambda0: f64, start: usize) -> String {
        let mut id = format!("n{n}");
        if self.lambda0_grid.len() > 1 {
            id.push_str(&format!("-l{lambda0:e}"));
        }
        if self.starts_per_case > 1 {
            id.push_str(&format!("-s{start}"));
        }
        id
    }

    fn start_point(&self, case: &Case) -> SpdPoint {
        match self.problem.name.as_str() {
            "f3" => random_point(case.n, &mut ChaCha8Rng::seed_from_u64(case.seed)),
            _ => SpdPoint::scaled_identity(case.n, (case.n as f64).ln()),
        }
    }

    /// Solver settings for one method at a given `λ₀`.
    pub fn method_config(&self, method: Method, lambda0: f64) -> MethodConfig {
        let (eps_stop, max_outer) = (self.eps_stop, self.max_outer);
        match method {
            Method::Rppm => MethodConfig::Rppm(RppmConfig {
                lambda0,
                eps_stop,
                max_outer,
                ..Default::default()
            }),
            Method::Adap => MethodConfig::Adap(AdapConfig {
                lambda0,
                eps_stop,
                max_outer,
                ..Default::default()
            }),
            Method::Dca => MethodConfig::Dca(DcaConfig { eps_stop, max_outer, ..Default::default() }),
            Method::Dcppa => MethodConfig::Dcppa(DcppaConfig {
                lambda: lambda0,
                eps_stop,
                max_outer,
                ..Default::default()
            }),
        }
    }
}

/// One method on one start.
#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    /// Shared by all methods run from the same start.
    pub id: String,
    pub n: usize,
    pub method: Method,
    pub lambda0: f64,
    pub start: usize,
    pub seed: u64,
}

/// Seed of a case: splitmix64 over the experiment seed and an FNV-1a hash of
/// the case id. Stable across platforms and releases.
pub fn case_seed(seed: u64, case_id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in case_id.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = seed ^ h.rotate_left(17);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Result of one case, as serialized to the summary CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub case_id: String,
    pub method: Method,
    pub n: usize,
    pub lambda0: f64,
    pub seed: u64,
    pub iterations: usize,
    pub cpu_seconds: f64,
    pub f_final: f64,
    pub det_final: f64,
    /// `None` when the problem could not be built.
    pub termination: Option<Termination>,
    pub criticality_residual: f64,
    pub lambda_final: f64,
    pub doubling_count: usize,
    /// Distance from the final iterate to the known critical point, or the
    /// gap to the nearest stationary determinant level.
    pub stationary_gap: f64,
    pub violations: Vec<String>,
    pub error: Option<String>,
}

impl RunRecord {
    pub fn termination_str(&self) -> &'static str {
        self.termination.map_or("problem_error", Termination::as_str)
    }

    /// No invariant violations and a problem that could be built.
    pub fn is_valid(&self) -> bool {
        self.termination.is_some() && self.violations.is_empty()
    }

    /// Stopped by the step tolerance within `tol` of a stationary point.
    pub fn solved(&self, tol: f64) -> bool {
        self.termination == Some(Termination::StepTol) && self.stationary_gap <= tol
    }

    fn failed(case: &Case, err: String) -> Self {
        Self {
            case_id: case.id.clone(),
            method: case.method,
            n: case.n,
            lambda0: case.lambda0,
            seed: case.seed,
            iterations: 0,
            cpu_seconds: 0.0,
            f_final: f64::NAN,
            det_final: f64::NAN,
            termination: None,
            criticality_residual: f64::NAN,
            lambda_final: f64::NAN,
            doubling_count: 0,
            stationary_gap: f64::NAN,
            violations: Vec::new(),
            error: Some(err),
        }
    }
}

fn stationary_gap(p: &DcProblem, x: &SpdPoint) -> f64 {
    match p.stationary_set() {
        Some(StationarySet::Point(c)) => distance(x, &c).unwrap_or(f64::NAN),
        Some(set) => set.gap(x).unwrap_or(f64::NAN),
        None => f64::NAN,
    }
}

/// Runs one case and cross-checks the run against its method's invariants.
pub fn run_case(cfg: &ExperimentConfig, case: &Case) -> (RunRecord, Option<SolverRun>) {
    let p = match cfg.problem.build(case.n) {
        Ok(p) => p,
        Err(e) => return (RunRecord::failed(case, e.to_string()), None),
    };
    let mcfg = cfg.method_config(case.method, case.lambda0);
    let x0 = cfg.start_point(case);
    let r = run(&p, &x0, &mcfg);
    let violations = check_invariants(&p, &r, &mcfg)
        .into_iter()
        .map(|v| v.to_string())
        .collect();
    let record = RunRecord {
        case_id: case.id.clone(),
        method: case.method,
        n: case.n,
        lambda0: case.lambda0,
        seed: case.seed,
        iterations: r.iterations,
        cpu_seconds: r.cpu_seconds,
        f_final: r.f_final,
        det_final: r.x_final.det(),
        termination: Some(r.termination),
        criticality_residual: p.criticality_residual(&r.x_final).unwrap_or(f64::NAN),
        lambda_final: r.lambda_final,
        doubling_count: r.doubling_count,
        stationary_gap: stationary_gap(&p, &r.x_final),
        violations,
        error: r.error.clone(),
    };
    (record, Some(r))
}

/// Records and full runs of an experiment, in case order.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<RunRecord>,
    pub runs: Vec<Option<SolverRun>>,
}

impl ExperimentOutput {
    pub fn invalid_count(&self) -> usize {
        self.records.iter().filter(|r| !r.is_valid()).count()
    }
}

/// Runs every case of `cfg`, on `cfg.threads` workers when set.
pub fn execute(cfg: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    cfg.validate()?;
    let cases = cfg.cases();
    let work = || -> Vec<_> { cases.par_iter().map(|c| run_case(cfg, c)).collect() };
    let results = match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| HarnessError::Config(e.to_string()))?
            .install(work),
        None => work(),
    };
    let (records, runs) = results.into_iter().unzip();
    Ok(ExperimentOutput { records, runs })
}

fn prepare_dir(dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir.join("traces")).map_err(|e| HarnessError::io(dir, e))
}

/// Writes `summary.csv`, `violations.csv` and `traces/<case>-<method>.csv`.
pub fn write_common(dir: &Path, out: &ExperimentOutput) -> Result<(), HarnessError> {
    prepare_dir(dir)?;
    emit_csv(&out.records, &dir.join("summary.csv"))?;
    output::emit_violations_csv(&out.records, &dir.join("violations.csv"))?;
    for (rec, run) in out.records.iter().zip(&out.runs) {
        if let Some(run) = run {
            let name = format!("{}-{}.csv", rec.case_id, rec.method);
            emit_trace_csv(&run.trace, &dir.join("traces").join(name))?;
        }
    }
    Ok(())
}

/// Adap-RPPM on f1 for each `λ₀` in the grid from `X⁰ = log(n) I`.
///
/// Writes the common files plus `lambda_table.csv` (final `λ_k` and
/// iteration count per `λ₀`) and `convergence.svg` (`|f(X^k) − f(X*)|`).
pub fn run_lambda_sensitivity(cfg: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    if cfg.name != ExperimentKind::LambdaSensitivity {
        return Err(HarnessError::Config("expected a lambda_sensitivity config".into()));
    }
    let out = execute(cfg)?;
    if let Some(dir) = &cfg.output_dir {
        write_common(dir, &out)?;
        output::emit_lambda_table(&out.records, &dir.join("lambda_table.csv"))?;
        let f_star = cfg
            .problem
            .build(cfg.n_grid[0])
            .ok()
            .and_then(|p| match p.stationary_set() {
                Some(StationarySet::Point(c)) => Some(p.eval_f(&c)),
                _ => None,
            });
        if let Some(f_star) = f_star {
            let series: Vec<_> = out
                .records
                .iter()
                .zip(&out.runs)
                .filter_map(|(rec, run)| {
                    run.as_ref()
                        .map(|r| (format!("{} λ0={:e}", rec.method, rec.lambda0), r.trace.as_slice()))
                })
                .collect();
            emit_convergence_svg(&series, f_star, &dir.join("convergence.svg"))?;
        }
    }
    Ok(out)
}

/// Adap-RPPM on f2 across matrix sizes from `X⁰ = log(n) I`.
///
/// Writes the common files plus `scaling.csv` (manifold dimension
/// `n(n+1)/2`, CPU time, determinant gap) and `scaling.svg`.
pub fn run_scaling(cfg: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    if cfg.name != ExperimentKind::Scaling {
        return Err(HarnessError::Config("expected a scaling config".into()));
    }
    let out = execute(cfg)?;
    if let Some(dir) = &cfg.output_dir {
        write_common(dir, &out)?;
        output::emit_scaling_csv(&out.records, &dir.join("scaling.csv"))?;
        emit_scaling_svg(&out.records, &dir.join("scaling.svg"))?;
    }
    Ok(out)
}

/// `n(n+1)/2`.
pub fn manifold_dimension(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Least-squares slope of CPU seconds against manifold dimension.
pub fn scaling_slope(records: &[RunRecord]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.termination.is_some())
        .map(|r| (manifold_dimension(r.n) as f64, r.cpu_seconds))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / m, b + y / m));
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Tolerance on `det X` for a comparison case to count as solved.
pub const SOLVED_DET_TOL: f64 = 1e-3;

/// Performance profiles of a comparison, over CPU time and over iteration
/// counts. Unsolved cases have infinite cost.
pub fn comparison_profiles(cfg: &ExperimentConfig, records: &[RunRecord]) -> (PerfProfile, PerfProfile) {
    let methods = &cfg.methods;
    let mut ids: Vec<&str> = Vec::new();
    for r in records {
        if !ids.contains(&r.case_id.as_str()) {
            ids.push(&r.case_id);
        }
    }
    let cost = |pick: &dyn Fn(&RunRecord) -> f64| -> Vec<Vec<Option<f64>>> {
        ids.iter()
            .map(|id| {
                methods
                    .iter()
                    .map(|m| {
                        records
                            .iter()
                            .find(|r| r.case_id == *id && r.method == *m)
                            .filter(|r| r.solved(SOLVED_DET_TOL))
                            .map(pick)
                    })
                    .collect()
            })
            .collect()
    };
    let time = PerfProfile::from_costs("cpu_seconds", methods, &cost(&|r| r.cpu_seconds));
    let iters = PerfProfile::from_costs("iterations", methods, &cost(&|r| r.iterations.max(1) as f64));
    (time, iters)
}

/// Adap-RPPM against DCA and DCPPA on f3 from seeded random starts.
///
/// Writes the common files plus `profile_time.{csv,svg}` and
/// `profile_iterations.{csv,svg}`. Returns the CPU-time profile.
pub fn run_comparison(cfg: &ExperimentConfig) -> Result<(ExperimentOutput, PerfProfile), HarnessError> {
    if cfg.name != ExperimentKind::Comparison {
        return Err(HarnessError::Config("expected a comparison config".into()));
    }
    let out = execute(cfg)?;
    let (time, iters) = comparison_profiles(cfg, &out.records);
    if let Some(dir) = &cfg.output_dir {
        write_common(dir, &out)?;
        emit_profile_csv(&time, &dir.join("profile_time.csv"))?;
        emit_profile_svg(&time, &dir.join("profile_time.svg"))?;
        emit_profile_csv(&iters, &dir.join("profile_iterations.csv"))?;
        emit_profile_svg(&iters, &dir.join("profile_iterations.svg"))?;
    }
    Ok((out, time))
}

impl FromStr for ExperimentKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "lambda_sensitivity" => Ok(Self::LambdaSensitivity),
            "scaling" => Ok(Self::Scaling),
            "comparison" => Ok(Self::Comparison),
            "custom" => Ok(Self::Custom),
            other => Err(HarnessError::Config(format!("unknown experiment {other}"))),
        }
    }
}
