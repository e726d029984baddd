//! Composite problems `f = g1 + g2 − h` on the SPD manifold.
//!
//! `g1` enters the method only through its proximal subproblem, `g2` is
//! smooth (its Riemannian gradient is used explicitly) and `h` is
//! geodesically convex (a subgradient is used).

mod builtin;

pub use builtin::{
    f1_critical_point, f2_stationary_dets, f3_stationary_dets, make_f1, make_f2, make_f3, F1, F2,
    F3,
};

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::manifold::{distance, norm, ManifoldError, SpdPoint, TangentVector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("infeasible parameters: discriminant 1 + 4(alpha - mu*i)*i = {discriminant} < 0 at i = {index}")]
    InfeasibleParameters { index: usize, discriminant: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown problem {0:?} (expected f1, f2 or f3)")]
    UnknownProblem(String),
    #[error("problem {0} does not expose a gradient for g1")]
    Unsupported(String),
    #[error("point has size {got}, problem has size {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
}

/// How the proximal subproblem in `g1` can be solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProxStructure {
    /// `g1 ≡ 0`: the prox of `λ/2 d²(·, z)` is `z` itself.
    Zero,
    /// `g1` is smooth and exposes a Riemannian gradient.
    Smooth,
    /// No gradient available; only value evaluations.
    Opaque,
}

/// Known critical points of a built-in problem.
#[derive(Debug, Clone)]
pub enum StationarySet {
    Point(SpdPoint),
    /// Every point whose determinant equals one of the listed values.
    DetLevels(Vec<f64>),
}

impl StationarySet {
    /// Riemannian distance to the point, or the smallest `|det X − level|`.
    pub fn gap(&self, x: &SpdPoint) -> Result<f64, ManifoldError> {
        match self {
            StationarySet::Point(p) => distance(p, x),
            StationarySet::DetLevels(levels) => {
                let det = x.det();
                Ok(levels
                    .iter()
                    .map(|l| (det - l).abs())
                    .fold(f64::INFINITY, f64::min))
            }
        }
    }
}

/// The pieces of a composite objective.
pub trait DcParts: Send + Sync {
    fn name(&self) -> &str;
    fn n(&self) -> usize;
    fn g1(&self, x: &SpdPoint) -> f64;
    fn g2(&self, x: &SpdPoint) -> f64;
    fn h(&self, x: &SpdPoint) -> f64;
    fn prox_g1(&self) -> ProxStructure;
    /// Riemannian gradient of `g1`, when [`ProxStructure::Smooth`] or `Zero`.
    fn rgrad_g1(&self, x: &SpdPoint) -> Option<TangentVector>;
    fn rgrad_g2(&self, x: &SpdPoint) -> TangentVector;
    fn subgrad_h(&self, x: &SpdPoint) -> TangentVector;
    /// Lipschitz modulus of `grad g2`, when known.
    fn lipschitz_l(&self) -> Option<f64> {
        None
    }
    /// A lower bound on `f`, used only by complexity checks.
    fn f_low_hint(&self) -> Option<f64> {
        None
    }
    fn stationary_set(&self) -> Option<StationarySet> {
        None
    }
}

/// Shared handle to a composite problem.
#[derive(Clone)]
pub struct DcProblem(Arc<dyn DcParts>);

impl fmt::Debug for DcProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DcProblem")
            .field("name", &self.name())
            .field("n", &self.n())
            .finish()
    }
}

impl DcProblem {
    pub fn new(parts: impl DcParts + 'static) -> Self {
        Self(Arc::new(parts))
    }

    pub fn name(&self) -> &str {
        self.0.name()
    }

    pub fn n(&self) -> usize {
        self.0.n()
    }

    pub fn eval_g1(&self, x: &SpdPoint) -> f64 {
        self.0.g1(x)
    }

    pub fn eval_g2(&self, x: &SpdPoint) -> f64 {
        self.0.g2(x)
    }

    pub fn eval_h(&self, x: &SpdPoint) -> f64 {
        self.0.h(x)
    }

    pub fn eval_f(&self, x: &SpdPoint) -> f64 {
        self.0.g1(x) + self.0.g2(x) - self.0.h(x)
    }

    pub fn prox_g1(&self) -> ProxStructure {
        self.0.prox_g1()
    }

    pub fn rgrad_g1(&self, x: &SpdPoint) -> Option<TangentVector> {
        match self.0.prox_g1() {
            ProxStructure::Zero => Some(TangentVector::zero(x)),
            _ => self.0.rgrad_g1(x),
        }
    }

    pub fn rgrad_g2(&self, x: &SpdPoint) -> TangentVector {
        self.0.rgrad_g2(x)
    }

    pub fn subgrad_h(&self, x: &SpdPoint) -> TangentVector {
        self.0.subgrad_h(x)
    }

    pub fn lipschitz_l(&self) -> Option<f64> {
        self.0.lipschitz_l()
    }

    pub fn f_low_hint(&self) -> Option<f64> {
        self.0.f_low_hint()
    }

    pub fn stationary_set(&self) -> Option<StationarySet> {
        self.0.stationary_set()
    }

    pub fn check_size(&self, x: &SpdPoint) -> Result<(), ProblemError> {
        if x.dim() != self.n() {
            return Err(ProblemError::SizeMismatch {
                expected: self.n(),
                got: x.dim(),
            });
        }
        Ok(())
    }

    /// `‖grad g1(x) + grad g2(x) − w‖_x` with `w` the selected subgradient
    /// of `h`. Zero exactly at critical points of smooth problems.
    pub fn criticality_residual(&self, x: &SpdPoint) -> Result<f64, ProblemError> {
        self.check_size(x)?;
        let g1 = self
            .rgrad_g1(x)
            .ok_or_else(|| ProblemError::Unsupported(self.name().to_string()))?;
        let r = g1
            .try_add(&self.rgrad_g2(x))?
            .try_sub(&self.subgrad_h(x))?;
        Ok(norm(&r))
    }

    /// Accepts `x` as critical when the residual is at most `tol`.
    pub fn check_criticality(&self, x: &SpdPoint, tol: f64) -> Result<(f64, bool), ProblemError> {
        let r = self.criticality_residual(x)?;
        Ok((r, r <= tol))
    }
}

/// Builds a built-in problem from its harness name.
pub fn make_problem(name: &str, n: usize, alpha: f64, mu: f64) -> Result<DcProblem, ProblemError> {
    match name {
        "f1" => make_f1(n, alpha, mu),
        "f2" => make_f2(n),
        "f3" => make_f3(n),
        other => Err(ProblemError::UnknownProblem(other.to_string())),
    }
}
