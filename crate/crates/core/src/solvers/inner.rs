//! Riemannian gradient descent with Armijo backtracking for the smooth
//! subproblems of the outer methods.

use crate::manifold::{exp_map, inner, log_map, logm_frechet, norm, symmetrize, Mat, SpdPoint};
use crate::manifold::{egrad_to_rgrad, parallel_transport, TangentVector};
use crate::problems::{DcProblem, ProxStructure};

use super::{InnerConfig, SolverError};

/// A smooth function on the SPD manifold.
pub trait SmoothObjective {
    /// Value and the sum of absolute values of its additive terms; the
    /// latter (floored at 1) bounds the round-off in the value.
    fn evaluate(&self, x: &SpdPoint) -> Result<(f64, f64), SolverError>;
    fn rgrad(&self, x: &SpdPoint) -> Result<TangentVector, SolverError>;
}

/// Objective of one outer iteration:
/// `g1(x) [+ g2(x)] [+ λ/2 d²(x, z)] [− ⟨w, log_{a}(x)⟩_a]`.
#[derive(Clone)]
pub struct Subproblem<'a> {
    pub problem: &'a DcProblem,
    pub include_g2: bool,
    pub prox: Option<(f64, SpdPoint)>,
    pub linearized_h: Option<TangentVector>,
}

impl<'a> Subproblem<'a> {
    /// `g1(x) + λ/2 d²(x, z)`.
    pub fn proximal(problem: &'a DcProblem, lambda: f64, z: &SpdPoint) -> Self {
        Self {
            problem,
            include_g2: false,
            prox: Some((lambda, z.clone())),
            linearized_h: None,
        }
    }

    /// `g1(x) + g2(x) − ⟨w, log_{w.base()}(x)⟩`.
    pub fn linearized(problem: &'a DcProblem, w: &TangentVector) -> Self {
        Self {
            problem,
            include_g2: true,
            prox: None,
            linearized_h: Some(w.clone()),
        }
    }

    /// The minimizer is `z` when nothing but the distance term depends on x.
    fn closed_form(&self) -> Option<SpdPoint> {
        let g2_free = !self.include_g2;
        match (&self.prox, &self.linearized_h) {
            (Some((_, z)), None) if g2_free && self.problem.prox_g1() == ProxStructure::Zero => {
                Some(z.clone())
            }
            _ => None,
        }
    }

    fn init_step(&self, cfg: &InnerConfig) -> f64 {
        match (cfg.init_step, &self.prox) {
            (Some(s), _) => s,
            (None, Some((lambda, _))) => 1.0 / lambda,
            (None, None) => 1.0,
        }
    }
}

/// `⟨W, log_A(X)⟩_A = tr(W̃ logm(A^{-1/2} X A^{-1/2}))` with `W̃ = A^{-1/2} W A^{-1/2}`.
fn linear_term(w: &TangentVector, x: &SpdPoint) -> Result<f64, SolverError> {
    let l = log_map(w.base(), x)?;
    Ok(inner(w, &l)?)
}

fn linear_term_rgrad(w: &TangentVector, x: &SpdPoint) -> Result<TangentVector, SolverError> {
    let a = w.base();
    let s = a.inv_sqrt();
    let y = symmetrize(&(s * x.mat() * s));
    let w_tilde = symmetrize(&(s * w.vec() * s));
    let dy = logm_frechet(&y, &w_tilde)?;
    let egrad: Mat = s * dy * s;
    Ok(egrad_to_rgrad(x, &egrad)?)
}

impl SmoothObjective for Subproblem<'_> {
    fn evaluate(&self, x: &SpdPoint) -> Result<(f64, f64), SolverError> {
        let g1 = self.problem.eval_g1(x);
        let mut value = g1;
        let mut magnitude = g1.abs();
        if self.include_g2 {
            let g2 = self.problem.eval_g2(x);
            value += g2;
            magnitude += g2.abs();
        }
        if let Some((lambda, z)) = &self.prox {
            let d = crate::manifold::distance(x, z)?;
            let term = 0.5 * lambda * d * d;
            value += term;
            magnitude += term;
        }
        if let Some(w) = &self.linearized_h {
            let term = linear_term(w, x)?;
            value -= term;
            magnitude += term.abs();
        }
        Ok((value, magnitude))
    }

    fn rgrad(&self, x: &SpdPoint) -> Result<TangentVector, SolverError> {
        let mut g = self
            .problem
            .rgrad_g1(x)
            .ok_or_else(|| SolverError::UnsupportedG1(self.problem.name().to_string()))?;
        if self.include_g2 {
            g = g.try_add(&self.problem.rgrad_g2(x))?;
        }
        if let Some((lambda, z)) = &self.prox {
            g = g.try_axpy(-lambda, &log_map(x, z)?)?;
        }
        if let Some(w) = &self.linearized_h {
            g = g.try_sub(&linear_term_rgrad(w, x)?)?;
        }
        Ok(g)
    }
}

#[derive(Debug, Clone)]
pub struct InnerOutcome {
    pub x: SpdPoint,
    pub value: f64,
    pub grad_norm: f64,
    pub iters: usize,
    pub converged: bool,
}

/// Smallest fraction of the initial step tried before declaring a stall.
const MIN_STEP_FRACTION: f64 = 1e-40;
/// Barzilai–Borwein steps are kept within this factor of `init_step`.
const BB_RANGE: f64 = 1e8;

/// `⟨s, s⟩/⟨s, y⟩` at `next`, with `s = −t Γ(g)` and `y = g_next − Γ(g)`.
fn barzilai_borwein(g: &TangentVector, t: f64, g_next: &TangentVector, next: &SpdPoint) -> Option<f64> {
    let moved = parallel_transport(g, next).ok()?;
    let s = moved.scaled(-t);
    let y = g_next.try_sub(&moved).ok()?;
    let sy = inner(&s, &y).ok()?;
    (sy > 0.0).then(|| inner(&s, &s).ok().map(|ss| ss / sy))?
}

/// Gradient descent along `exp_x(−t grad)` with Armijo backtracking, taking
/// the first step size `t₀·βʲ` that passes. The first line search starts at
/// `t₀ = init_step`, later ones at the Barzilai–Borwein step
/// `⟨s, s⟩/⟨s, y⟩` built from the transported previous step and gradient.
///
/// Once the required decrease drops below the round-off level of the
/// objective, a trial whose value is within that level is accepted if it
/// strictly reduces the gradient norm.
pub fn minimize(
    obj: &impl SmoothObjective,
    warm_start: &SpdPoint,
    cfg: &InnerConfig,
    init_step: f64,
) -> Result<InnerOutcome, SolverError> {
    let mut x = warm_start.clone();
    let (mut value, mut magnitude) = obj.evaluate(&x)?;
    let mut grad = obj.rgrad(&x)?;
    let mut grad_norm = norm(&grad);
    let mut iters = 0;
    // log-det and matrix-log terms accumulate round-off over all eigenvalues
    let noise_per_unit = 64.0 * x.dim() as f64 * f64::EPSILON;
    let mut trial_step = init_step;

    while grad_norm > cfg.grad_tol {
        if iters >= cfg.max_inner {
            return Ok(InnerOutcome { x, value, grad_norm, iters, converged: false });
        }
        let sq = grad_norm * grad_norm;
        let mut t = trial_step;
        let accepted = loop {
            if t < init_step * MIN_STEP_FRACTION {
                break None;
            }
            let trial = exp_map(&x, &grad.scaled(-t))
                .map_err(SolverError::from)
                .and_then(|p| obj.evaluate(&p).map(|e| (p, e)));
            if let Ok((p, (tv, tmag))) = trial {
                let required = cfg.armijo_sigma * t * sq;
                let noise = noise_per_unit * magnitude.max(tmag).max(1.0);
                if required > noise {
                    if tv <= value - required {
                        let g = obj.rgrad(&p)?;
                        break Some((p, tv, tmag, g));
                    }
                } else if tv <= value + noise {
                    let g = obj.rgrad(&p)?;
                    if norm(&g) < grad_norm {
                        break Some((p, tv, tmag, g));
                    }
                }
            }
            t *= cfg.armijo_beta;
        };
        match accepted {
            Some((p, tv, tmag, g)) => {
                trial_step = barzilai_borwein(&grad, t, &g, &p)
                    .filter(|b| b.is_finite() && *b > 0.0)
                    .map_or(init_step, |b| b.clamp(init_step * BB_RANGE.recip(), init_step * BB_RANGE));
                x = p;
                value = tv;
                magnitude = tmag;
                grad_norm = norm(&g);
                grad = g;
                iters += 1;
            }
            None => {
                return Ok(InnerOutcome { x, value, grad_norm, iters, converged: false });
            }
        }
    }
    Ok(InnerOutcome { x, value, grad_norm, iters, converged: true })
}

/// Solves `min_x g1(x) + λ/2 d²(x, z)` from `warm_start`.
pub fn inner_solve(
    problem: &DcProblem,
    lambda: f64,
    z: &SpdPoint,
    cfg: &InnerConfig,
    warm_start: &SpdPoint,
) -> Result<InnerOutcome, SolverError> {
    solve_subproblem(&Subproblem::proximal(problem, lambda, z), cfg, warm_start)
}

pub fn solve_subproblem(
    sub: &Subproblem<'_>,
    cfg: &InnerConfig,
    warm_start: &SpdPoint,
) -> Result<InnerOutcome, SolverError> {
    if let Some(z) = sub.closed_form() {
        return Ok(InnerOutcome {
            value: sub.problem.eval_g1(&z),
            x: z,
            grad_norm: 0.0,
            iters: 0,
            converged: true,
        });
    }
    minimize(sub, warm_start, cfg, sub.init_step(cfg))
}
