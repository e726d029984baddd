use std::time::Instant;

use crate::manifold::{distance, exp_map, SpdPoint, TangentVector};
use crate::problems::DcProblem;

use super::inner::{solve_subproblem, InnerOutcome, Subproblem};
use super::{
    AdapConfig, DcaConfig, DcppaConfig, InnerConfig, MethodConfig, RppmConfig, SolverError,
    SolverRun, SolverState, Termination,
};

/// Where the smooth part `g2` enters a proximal step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmoothPart {
    /// Linearized: `v = grad g2(x)` shifts the anchor `z`.
    Explicit,
    /// Kept inside the subproblem; `v = 0`.
    Implicit,
}

fn require_converged(out: InnerOutcome) -> Result<InnerOutcome, SolverError> {
    if out.converged {
        Ok(out)
    } else {
        Err(SolverError::InnerFailure {
            iters: out.iters,
            grad_norm: out.grad_norm,
        })
    }
}

/// `w − v` at `x`.
fn anchor_direction(p: &DcProblem, x: &SpdPoint, smooth: SmoothPart) -> Result<TangentVector, SolverError> {
    let w = p.subgrad_h(x);
    Ok(match smooth {
        SmoothPart::Explicit => w.try_sub(&p.rgrad_g2(x))?,
        SmoothPart::Implicit => w,
    })
}

/// Anchor `z = exp_x((w − v)/λ)` and the proximal point from warm start `x`.
fn proximal_trial(
    p: &DcProblem,
    x: &SpdPoint,
    direction: &TangentVector,
    lambda: f64,
    smooth: SmoothPart,
    inner: &InnerConfig,
) -> Result<InnerOutcome, SolverError> {
    let z = exp_map(x, &direction.scaled(1.0 / lambda))?;
    let mut sub = Subproblem::proximal(p, lambda, &z);
    sub.include_g2 = smooth == SmoothPart::Implicit;
    solve_subproblem(&sub, inner, x)
}

/// One proximal step with fixed `λ`.
pub fn proximal_step(
    p: &DcProblem,
    s: &mut SolverState,
    lambda: f64,
    smooth: SmoothPart,
    inner: &InnerConfig,
) -> Result<(), SolverError> {
    let direction = anchor_direction(p, &s.x, smooth)?;
    let out = require_converged(proximal_trial(p, &s.x, &direction, lambda, smooth, inner)?)?;
    s.advance(p, out.x, lambda, out.iters)
}

/// One iteration of the fixed-parameter method; `s.lambda_k` is the
/// parameter of this iteration and is replaced by the next one from the
/// schedule.
pub fn rppm_step(p: &DcProblem, s: &mut SolverState, cfg: &RppmConfig) -> Result<(), SolverError> {
    let lipschitz = p.lipschitz_l().ok_or_else(|| {
        SolverError::InvalidConfig(format!("{} has no Lipschitz constant for grad g2", p.name()))
    })?;
    let lambda = s.lambda_k;
    if !(lambda > lipschitz && lambda <= lipschitz + cfg.alpha_margin) {
        return Err(SolverError::InvalidConfig(format!(
            "lambda_k = {lambda} outside (L, L + alpha]"
        )));
    }
    proximal_step(p, s, lambda, SmoothPart::Explicit, &cfg.inner)?;
    s.lambda_k = cfg.lambda_at(s.k, lipschitz);
    Ok(())
}

/// One DCPPA iteration: `g2` is grouped with `g1` in the subproblem.
pub fn dcppa_step(p: &DcProblem, s: &mut SolverState, cfg: &DcppaConfig) -> Result<(), SolverError> {
    proximal_step(p, s, cfg.lambda, SmoothPart::Implicit, &cfg.inner)
}

/// One iteration of the adaptive method. Trials that fail numerically
/// (anchor outside floating-point range, unconverged subproblem) are
/// rejected like trials that miss the decrease test.
pub fn adap_step(p: &DcProblem, s: &mut SolverState, cfg: &AdapConfig) -> Result<(), SolverError> {
    let direction = anchor_direction(p, &s.x, SmoothPart::Explicit)?;
    loop {
        let lambda = s.lambda_k;
        if lambda > cfg.lambda_hard_cap {
            return Err(SolverError::DoublingOverflow {
                lambda,
                cap: cfg.lambda_hard_cap,
            });
        }
        let trial = proximal_trial(p, &s.x, &direction, lambda, SmoothPart::Explicit, &cfg.inner);
        if let Ok(out) = trial {
            if out.converged {
                let d = distance(&out.x, &s.x)?;
                if d <= cfg.eps_stop {
                    return s.advance(p, out.x, lambda, out.iters);
                }
                let f_next = p.eval_f(&out.x);
                let noise = super::checks::roundoff(f_next, s.f_val);
                if f_next - s.f_val <= -0.25 * lambda * d * d + noise {
                    return s.advance(p, out.x, lambda, out.iters);
                }
            }
        }
        s.lambda_k = 2.0 * lambda;
        s.doubling_count += 1;
    }
}

/// One DCA iteration: minimize `g1 + g2 − ⟨w, log_x(·)⟩_x` with `w ∈ ∂h(x)`.
pub fn dca_step(p: &DcProblem, s: &mut SolverState, cfg: &DcaConfig) -> Result<(), SolverError> {
    let w = p.subgrad_h(&s.x);
    let sub = Subproblem::linearized(p, &w);
    let out = require_converged(solve_subproblem(&sub, &cfg.inner, &s.x)?)?;
    s.advance(p, out.x, f64::NAN, out.iters)
}

fn validate(p: &DcProblem, cfg: &MethodConfig) -> Result<(), SolverError> {
    match cfg {
        MethodConfig::Rppm(c) => {
            let l = p.lipschitz_l().ok_or_else(|| {
                SolverError::InvalidConfig(format!("{} has no Lipschitz constant", p.name()))
            })?;
            c.validate(l)
        }
        MethodConfig::Adap(c) => c.validate(),
        MethodConfig::Dca(c) => c.inner.validate(),
        MethodConfig::Dcppa(c) => {
            if !(c.lambda > 0.0) {
                return Err(SolverError::InvalidConfig("dcppa lambda must be positive".into()));
            }
            c.inner.validate()
        }
    }
}

fn termination_of(err: &SolverError) -> Termination {
    match err {
        SolverError::InnerFailure { .. } => Termination::InnerFailure,
        SolverError::DoublingOverflow { .. } => Termination::DoublingOverflow,
        _ => Termination::NumericalError,
    }
}

/// Runs a method from `x0` until `d(x^{k+1}, x^k) ≤ eps_stop`, an exact
/// fixed point, `max_outer` iterations or an error. Errors end the run and
/// are recorded, never propagated.
pub fn run(p: &DcProblem, x0: &SpdPoint, cfg: &MethodConfig) -> SolverRun {
    let started = Instant::now();
    let lambda0 = cfg.lambda0(p.lipschitz_l());
    let mut s = SolverState::new(p, x0.clone(), lambda0);
    let mut error = None;

    let termination = match validate(p, cfg).and_then(|_| Ok(p.check_size(x0)?)) {
        Err(e) => {
            error = Some(e.to_string());
            Termination::NumericalError
        }
        Ok(()) => loop {
            if s.k >= cfg.max_outer() {
                break Termination::MaxOuter;
            }
            let step = match cfg {
                MethodConfig::Rppm(c) => rppm_step(p, &mut s, c),
                MethodConfig::Adap(c) => adap_step(p, &mut s, c),
                MethodConfig::Dca(c) => dca_step(p, &mut s, c),
                MethodConfig::Dcppa(c) => dcppa_step(p, &mut s, c),
            };
            if let Err(e) = step {
                let t = termination_of(&e);
                error = Some(e.to_string());
                break t;
            }
            if s.step_dist == 0.0 {
                break Termination::FixedPoint;
            }
            if s.step_dist <= cfg.eps_stop() {
                break Termination::StepTol;
            }
        },
    };

    let lambda_final = s.trace.last().map_or(lambda0, |r| r.lambda_k);
    SolverRun {
        method: cfg.method(),
        termination,
        x0: x0.clone(),
        f0: s.trace[0].f_val,
        f_final: s.f_val,
        iterations: s.k,
        lambda_final,
        doubling_count: s.doubling_count,
        cpu_seconds: started.elapsed().as_secs_f64(),
        trace: s.trace,
        x_final: s.x,
        error,
    }
}
