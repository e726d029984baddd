//! Proximal point methods for `f = g1 + g2 − h` and the DCA/DCPPA
//! baselines.
//!
//! Every outer iteration of the proximal methods computes
//! `z = exp_x((w − v)/λ)` from `v = grad g2(x)` and `w ∈ ∂h(x)` and then
//! solves `min g1(y) + λ/2 d²(y, z)`. The fixed-parameter method needs the
//! Lipschitz modulus `L` of `grad g2` and keeps `λ ∈ (L, L + α]`; the
//! adaptive one starts from any `λ₀ > 0` and doubles `λ` until the step
//! satisfies `f(x⁺) − f(x) ≤ −(λ/4) d²(x⁺, x)`.

mod checks;
mod inner;
mod methods;

pub use checks::{check_invariants, complexity_bound, large_step_count, Violation};
pub use inner::{
    inner_solve, minimize, solve_subproblem, InnerOutcome, SmoothObjective, Subproblem,
};
pub use methods::{adap_step, dca_step, dcppa_step, proximal_step, rppm_step, run, SmoothPart};

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use thiserror::Error;

use crate::manifold::{distance, ManifoldError, SpdPoint};
use crate::problems::{DcProblem, ProblemError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("inner solver stopped after {iters} iterations with gradient norm {grad_norm:e}")]
    InnerFailure { iters: usize, grad_norm: f64 },
    #[error("lambda grew to {lambda:e}, above the cap {cap:e}")]
    DoublingOverflow { lambda: f64, cap: f64 },
    #[error("problem {0} exposes no gradient for g1")]
    UnsupportedG1(String),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// Settings of the Armijo gradient method used for subproblems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerConfig {
    pub grad_tol: f64,
    pub max_inner: usize,
    pub armijo_beta: f64,
    pub armijo_sigma: f64,
    /// First trial step; `None` means `1/λ` for proximal subproblems and
    /// `1` otherwise.
    pub init_step: Option<f64>,
}

impl Default for InnerConfig {
    fn default() -> Self {
        Self {
            grad_tol: 1e-10,
            max_inner: 500,
            armijo_beta: 0.5,
            armijo_sigma: 1e-4,
            init_step: None,
        }
    }
}

impl InnerConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let unit = |v: f64| v > 0.0 && v < 1.0;
        if !(self.grad_tol > 0.0) || self.max_inner == 0 {
            return Err(SolverError::InvalidConfig(
                "inner grad_tol and max_inner must be positive".into(),
            ));
        }
        if !unit(self.armijo_beta) || !unit(self.armijo_sigma) {
            return Err(SolverError::InvalidConfig(
                "armijo parameters must lie in (0, 1)".into(),
            ));
        }
        if let Some(s) = self.init_step {
            if !(s > 0.0) {
                return Err(SolverError::InvalidConfig("init_step must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaSchedule {
    /// `λ_k = λ₀`.
    Constant,
    /// `λ_k = L + 1/ε + (α − 1/ε)(1 − q^k)`, with `ε` the stopping tolerance.
    Geometric { q: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RppmConfig {
    pub lambda0: f64,
    /// `α` in `L < λ_k ≤ L + α`.
    pub alpha_margin: f64,
    pub schedule: LambdaSchedule,
    pub eps_stop: f64,
    pub max_outer: usize,
    pub inner: InnerConfig,
}

impl Default for RppmConfig {
    fn default() -> Self {
        Self {
            lambda0: 1.01,
            alpha_margin: 1.0,
            schedule: LambdaSchedule::Constant,
            eps_stop: 1e-8,
            max_outer: 100,
            inner: InnerConfig::default(),
        }
    }
}

impl RppmConfig {
    /// `λ_k` for the configured schedule.
    pub fn lambda_at(&self, k: usize, lipschitz: f64) -> f64 {
        match self.schedule {
            LambdaSchedule::Constant => self.lambda0,
            LambdaSchedule::Geometric { q } => {
                let inv_eps = 1.0 / self.eps_stop;
                lipschitz + inv_eps + (self.alpha_margin - inv_eps) * (1.0 - q.powi(k as i32))
            }
        }
    }

    pub fn validate(&self, lipschitz: f64) -> Result<(), SolverError> {
        self.inner.validate()?;
        if !(self.eps_stop > 0.0) || !(self.alpha_margin > 0.0) {
            return Err(SolverError::InvalidConfig(
                "eps_stop and alpha_margin must be positive".into(),
            ));
        }
        match self.schedule {
            LambdaSchedule::Constant => {
                if !(self.lambda0 > lipschitz && self.lambda0 <= lipschitz + self.alpha_margin) {
                    return Err(SolverError::InvalidConfig(format!(
                        "lambda0 = {} must lie in (L, L + alpha] = ({lipschitz}, {}]",
                        self.lambda0,
                        lipschitz + self.alpha_margin
                    )));
                }
            }
            LambdaSchedule::Geometric { q } => {
                if !(q > 0.0 && q < 1.0) {
                    return Err(SolverError::InvalidConfig(format!("q = {q} must lie in (0, 1)")));
                }
                if self.alpha_margin < 1.0 / self.eps_stop {
                    return Err(SolverError::InvalidConfig(
                        "geometric schedule needs alpha >= 1/eps".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdapConfig {
    pub lambda0: f64,
    pub eps_stop: f64,
    pub max_outer: usize,
    pub inner: InnerConfig,
    /// Doubling past this value aborts the run.
    pub lambda_hard_cap: f64,
}

impl Default for AdapConfig {
    fn default() -> Self {
        Self {
            lambda0: 1e-4,
            eps_stop: 1e-8,
            max_outer: 100,
            inner: InnerConfig::default(),
            lambda_hard_cap: 1e12,
        }
    }
}

impl AdapConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        self.inner.validate()?;
        if !(self.lambda0 > 0.0) || !(self.eps_stop > 0.0) {
            return Err(SolverError::InvalidConfig(
                "lambda0 and eps_stop must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcaConfig {
    pub eps_stop: f64,
    pub max_outer: usize,
    pub inner: InnerConfig,
}

impl Default for DcaConfig {
    fn default() -> Self {
        Self {
            eps_stop: 1e-8,
            max_outer: 100,
            inner: InnerConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcppaConfig {
    pub lambda: f64,
    pub eps_stop: f64,
    pub max_outer: usize,
    pub inner: InnerConfig,
}

impl Default for DcppaConfig {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            eps_stop: 1e-8,
            max_outer: 100,
            inner: InnerConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Rppm,
    Adap,
    Dca,
    Dcppa,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Rppm => "rppm",
            Method::Adap => "adap",
            Method::Dca => "dca",
            Method::Dcppa => "dcppa",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rppm" => Ok(Method::Rppm),
            "adap" => Ok(Method::Adap),
            "dca" => Ok(Method::Dca),
            "dcppa" => Ok(Method::Dcppa),
            other => Err(format!("unknown method {other:?} (rppm, adap, dca, dcppa)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MethodConfig {
    Rppm(RppmConfig),
    Adap(AdapConfig),
    Dca(DcaConfig),
    Dcppa(DcppaConfig),
}

impl MethodConfig {
    pub fn method(&self) -> Method {
        match self {
            MethodConfig::Rppm(_) => Method::Rppm,
            MethodConfig::Adap(_) => Method::Adap,
            MethodConfig::Dca(_) => Method::Dca,
            MethodConfig::Dcppa(_) => Method::Dcppa,
        }
    }

    pub fn eps_stop(&self) -> f64 {
        match self {
            MethodConfig::Rppm(c) => c.eps_stop,
            MethodConfig::Adap(c) => c.eps_stop,
            MethodConfig::Dca(c) => c.eps_stop,
            MethodConfig::Dcppa(c) => c.eps_stop,
        }
    }

    pub fn max_outer(&self) -> usize {
        match self {
            MethodConfig::Rppm(c) => c.max_outer,
            MethodConfig::Adap(c) => c.max_outer,
            MethodConfig::Dca(c) => c.max_outer,
            MethodConfig::Dcppa(c) => c.max_outer,
        }
    }

    /// Initial proximal parameter (`NaN` for DCA, which has none).
    pub fn lambda0(&self, lipschitz: Option<f64>) -> f64 {
        match self {
            MethodConfig::Rppm(c) => c.lambda_at(0, lipschitz.unwrap_or(0.0)),
            MethodConfig::Adap(c) => c.lambda0,
            MethodConfig::Dca(_) => f64::NAN,
            MethodConfig::Dcppa(c) => c.lambda,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// `d(x^{k+1}, x^k) ≤ eps_stop`.
    StepTol,
    /// `x^{k+1} = x^k` exactly.
    FixedPoint,
    MaxOuter,
    InnerFailure,
    DoublingOverflow,
    /// Any other error raised by a step.
    NumericalError,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::StepTol => "step_tol",
            Termination::FixedPoint => "fixed_point",
            Termination::MaxOuter => "max_outer",
            Termination::InnerFailure => "inner_failure",
            Termination::DoublingOverflow => "doubling_overflow",
            Termination::NumericalError => "numerical_error",
        }
    }

    pub fn converged(self) -> bool {
        matches!(self, Termination::StepTol | Termination::FixedPoint)
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub f_val: f64,
    /// `d(x^k, x^{k−1})`; zero for the initial row.
    pub step_dist: f64,
    /// Parameter used to produce `x^k` (`λ₀` on the initial row).
    pub lambda_k: f64,
    pub inner_iters: usize,
    /// Elapsed time since the start of the run.
    pub cpu_seconds: f64,
}

/// Iterate and bookkeeping of a running method.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub k: usize,
    pub x: SpdPoint,
    pub lambda_k: f64,
    pub f_val: f64,
    pub step_dist: f64,
    pub doubling_count: usize,
    pub trace: Vec<IterationRecord>,
    started: Instant,
}

impl SolverState {
    pub fn new(p: &DcProblem, x0: SpdPoint, lambda0: f64) -> Self {
        let f_val = p.eval_f(&x0);
        Self {
            k: 0,
            x: x0,
            lambda_k: lambda0,
            f_val,
            step_dist: 0.0,
            doubling_count: 0,
            trace: vec![IterationRecord {
                k: 0,
                f_val,
                step_dist: 0.0,
                lambda_k: lambda0,
                inner_iters: 0,
                cpu_seconds: 0.0,
            }],
            started: Instant::now(),
        }
    }

    /// Moves to `next`, produced with parameter `lambda`.
    pub(crate) fn advance(
        &mut self,
        p: &DcProblem,
        next: SpdPoint,
        lambda: f64,
        inner_iters: usize,
    ) -> Result<(), SolverError> {
        self.step_dist = distance(&self.x, &next)?;
        self.f_val = p.eval_f(&next);
        self.x = next;
        self.k += 1;
        self.trace.push(IterationRecord {
            k: self.k,
            f_val: self.f_val,
            step_dist: self.step_dist,
            lambda_k: lambda,
            inner_iters,
            cpu_seconds: self.started.elapsed().as_secs_f64(),
        });
        Ok(())
    }
}

/// Outcome of [`run`].
#[derive(Debug, Clone)]
pub struct SolverRun {
    pub method: Method,
    pub termination: Termination,
    pub x0: SpdPoint,
    pub x_final: SpdPoint,
    pub f0: f64,
    pub f_final: f64,
    pub iterations: usize,
    pub lambda_final: f64,
    pub doubling_count: usize,
    pub cpu_seconds: f64,
    pub trace: Vec<IterationRecord>,
    pub error: Option<String>,
}
