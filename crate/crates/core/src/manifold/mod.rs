//! Hadamard-manifold kernel, instantiated for symmetric positive definite
//! matrices with the affine-invariant metric `⟨U, V⟩_X = tr(X⁻¹ U X⁻¹ V)`.

mod matfn;
mod spd;

pub use matfn::{
    asymmetry, logm_frechet, spd_expm, spd_inv_sqrt, spd_logm, spd_sqrt, symmetrize, Mat, SymEig,
};
pub use spd::{
    distance, egrad_to_rgrad, exp_map, grad_half_sq_dist, inner, log_map, norm,
    parallel_transport, random_point, random_tangent, Spd, SpdPoint, TangentVector,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ManifoldError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not symmetric (relative asymmetry {asym:e})")]
    NotSymmetric { asym: f64 },
    #[error("matrix is not positive definite (minimum eigenvalue {min_eig:e})")]
    NotPositiveDefinite { min_eig: f64 },
    #[error("tangent vectors are attached to different base points")]
    BaseMismatch,
    #[error("numerically degenerate input (non-finite entries or eigenvalues)")]
    Degenerate,
}

/// Tolerances used when validating points and tangent vectors, plus the
/// seed for any random generation driven from a configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldConfig {
    /// Relative Frobenius asymmetry accepted on construction.
    pub sym_tol: f64,
    /// Smallest eigenvalue accepted for an SPD point.
    pub eig_floor: f64,
    pub rng_seed: u64,
}

impl Default for ManifoldConfig {
    fn default() -> Self {
        Self {
            sym_tol: 1e-12,
            eig_floor: 1e-14,
            rng_seed: 0,
        }
    }
}

impl ManifoldConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.sym_tol > 0.0) {
            return Err(format!("sym_tol must be positive, got {}", self.sym_tol));
        }
        if !(self.eig_floor > 0.0) {
            return Err(format!("eig_floor must be positive, got {}", self.eig_floor));
        }
        Ok(())
    }
}

/// Geometric primitives of a Hadamard manifold.
///
/// Only [`Spd`] implements it; solvers are written against the SPD types.
pub trait HadamardManifold {
    type Point: Clone;
    type Tangent: Clone;
    type Ambient;

    fn exp(&self, x: &Self::Point, v: &Self::Tangent) -> Result<Self::Point, ManifoldError>;
    fn log(&self, x: &Self::Point, y: &Self::Point) -> Result<Self::Tangent, ManifoldError>;
    fn dist(&self, x: &Self::Point, y: &Self::Point) -> Result<f64, ManifoldError>;
    fn inner(&self, u: &Self::Tangent, v: &Self::Tangent) -> Result<f64, ManifoldError>;
    fn transport(&self, u: &Self::Tangent, to: &Self::Point)
        -> Result<Self::Tangent, ManifoldError>;
    fn egrad_to_rgrad(
        &self,
        x: &Self::Point,
        egrad: &Self::Ambient,
    ) -> Result<Self::Tangent, ManifoldError>;
}
