//! Spectral functions of symmetric matrices.
//!
//! Every function here goes through a symmetric eigendecomposition
//! `M = Q diag(μ) Qᵀ` and applies a scalar function to the spectrum. Inputs
//! are symmetrized as `(M + Mᵀ)/2` before decomposition.

use nalgebra::{DMatrix, DVector};

use super::ManifoldError;

pub type Mat = DMatrix<f64>;

/// `(M + Mᵀ) / 2`.
pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

/// Relative asymmetry `‖M − Mᵀ‖_F / ‖M‖_F` (zero for the zero matrix).
pub fn asymmetry(m: &Mat) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (m - m.transpose()).norm() / norm
}

pub(crate) fn check_square(m: &Mat) -> Result<usize, ManifoldError> {
    if m.nrows() != m.ncols() {
        return Err(ManifoldError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

/// Eigendecomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub values: DVector<f64>,
    pub vectors: Mat,
}

impl SymEig {
    pub fn new(m: &Mat) -> Result<Self, ManifoldError> {
        check_square(m)?;
        if m.iter().any(|v| !v.is_finite()) {
            return Err(ManifoldError::Degenerate);
        }
        let eig = symmetrize(m).symmetric_eigen();
        if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(ManifoldError::Degenerate);
        }
        Ok(Self {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        })
    }

    pub fn min(&self) -> f64 {
        self.values.min()
    }

    pub fn max(&self) -> f64 {
        self.values.max()
    }

    /// `Q diag(f(μ)) Qᵀ`, symmetrized.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> Mat {
        let mut scaled = self.vectors.clone();
        for (j, &mu) in self.values.iter().enumerate() {
            let s = f(mu);
            scaled.column_mut(j).scale_mut(s);
        }
        symmetrize(&(scaled * self.vectors.transpose()))
    }

    fn require_positive(&self) -> Result<(), ManifoldError> {
        let min_eig = self.min();
        if min_eig <= 0.0 {
            return Err(ManifoldError::NotPositiveDefinite { min_eig });
        }
        Ok(())
    }
}

fn finite(m: Mat) -> Result<Mat, ManifoldError> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(m)
    } else {
        Err(ManifoldError::Degenerate)
    }
}

/// Principal square root of an SPD matrix.
pub fn spd_sqrt(m: &Mat) -> Result<Mat, ManifoldError> {
    let eig = SymEig::new(m)?;
    eig.require_positive()?;
    Ok(eig.apply(f64::sqrt))
}

/// Inverse principal square root of an SPD matrix.
pub fn spd_inv_sqrt(m: &Mat) -> Result<Mat, ManifoldError> {
    let eig = SymEig::new(m)?;
    eig.require_positive()?;
    finite(eig.apply(|v| 1.0 / v.sqrt()))
}

/// Principal matrix logarithm of an SPD matrix.
pub fn spd_logm(m: &Mat) -> Result<Mat, ManifoldError> {
    let eig = SymEig::new(m)?;
    eig.require_positive()?;
    Ok(eig.apply(f64::ln))
}

/// Matrix exponential of a symmetric matrix.
pub fn spd_expm(m: &Mat) -> Result<Mat, ManifoldError> {
    let eig = SymEig::new(m)?;
    finite(eig.apply(f64::exp))
}

/// Fréchet derivative of `logm` at the SPD matrix `m` in the symmetric
/// direction `e`: `Q (Λ ∘ (Qᵀ E Q)) Qᵀ` with the first divided differences
/// `Λ_ij = (ln μ_i − ln μ_j)/(μ_i − μ_j)` (and `1/μ_i` on coinciding
/// eigenvalues). The map is self-adjoint for the Frobenius inner product.
pub fn logm_frechet(m: &Mat, e: &Mat) -> Result<Mat, ManifoldError> {
    let eig = SymEig::new(m)?;
    eig.require_positive()?;
    let q = &eig.vectors;
    let mut inner = q.transpose() * symmetrize(e) * q;
    let mu = &eig.values;
    let n = mu.len();
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (mu[i], mu[j]);
            let ratio = if ((a - b) / a.max(b)).abs() < 1e-8 {
                // ln a − ln b = ln(1 + δ) with δ = (a − b)/b, series to second order
                let delta = (a - b) / b;
                (1.0 - delta / 2.0 + delta * delta / 3.0) / b
            } else {
                (a.ln() - b.ln()) / (a - b)
            };
            inner[(i, j)] *= ratio;
        }
    }
    finite(symmetrize(&(q * inner * q.transpose())))
}
