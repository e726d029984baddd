use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use super::matfn::{check_square, symmetrize, Mat, SymEig};
use super::{asymmetry, HadamardManifold, ManifoldConfig, ManifoldError};

struct PointInner {
    mat: Mat,
    eig: SymEig,
    sqrt: OnceLock<Mat>,
    inv_sqrt: OnceLock<Mat>,
    inv: OnceLock<Mat>,
}

/// A point of the SPD manifold. Cloning is cheap; the eigendecomposition
/// computed during validation is kept and reused for square roots and
/// inverses.
#[derive(Clone)]
pub struct SpdPoint(Arc<PointInner>);

impl SpdPoint {
    /// Validates `mat` against the default tolerances.
    pub fn new(mat: Mat) -> Result<Self, ManifoldError> {
        Self::with_config(mat, &ManifoldConfig::default())
    }

    pub fn with_config(mat: Mat, cfg: &ManifoldConfig) -> Result<Self, ManifoldError> {
        check_square(&mat)?;
        let asym = asymmetry(&mat);
        if !(asym <= cfg.sym_tol) {
            return Err(ManifoldError::NotSymmetric { asym });
        }
        Self::from_symmetric(symmetrize(&mat), cfg.eig_floor)
    }

    /// Builds a point from the result of an internal computation: the input
    /// is symmetrized unconditionally and only strict positivity is checked,
    /// so far-away points such as `e^{-40} X` stay representable.
    pub(crate) fn from_computed(mat: Mat) -> Result<Self, ManifoldError> {
        check_square(&mat)?;
        Self::from_symmetric(symmetrize(&mat), 0.0)
    }

    fn from_symmetric(mat: Mat, eig_floor: f64) -> Result<Self, ManifoldError> {
        let eig = SymEig::new(&mat)?;
        let min_eig = eig.min();
        if !(min_eig > eig_floor) {
            return Err(ManifoldError::NotPositiveDefinite { min_eig });
        }
        Ok(Self(Arc::new(PointInner {
            mat,
            eig,
            sqrt: OnceLock::new(),
            inv_sqrt: OnceLock::new(),
            inv: OnceLock::new(),
        })))
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    /// `s·I`; panics unless `s > 0`.
    pub fn scaled_identity(n: usize, s: f64) -> Self {
        assert!(s > 0.0, "scaled identity needs a positive scale, got {s}");
        Self::diagonal(&vec![s; n]).expect("positive diagonal")
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self, ManifoldError> {
        Self::new(Mat::from_diagonal(&DVector::from_column_slice(entries)))
    }

    pub fn mat(&self) -> &Mat {
        &self.0.mat
    }

    pub fn dim(&self) -> usize {
        self.0.mat.nrows()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.0.eig.values
    }

    pub fn sqrt(&self) -> &Mat {
        self.0.sqrt.get_or_init(|| self.0.eig.apply(f64::sqrt))
    }

    pub fn inv_sqrt(&self) -> &Mat {
        self.0.inv_sqrt.get_or_init(|| self.0.eig.apply(|v| 1.0 / v.sqrt()))
    }

    pub fn inv(&self) -> &Mat {
        self.0.inv.get_or_init(|| self.0.eig.apply(|v| 1.0 / v))
    }

    pub fn log_det(&self) -> f64 {
        self.0.eig.values.iter().map(|v| v.ln()).sum()
    }

    pub fn det(&self) -> f64 {
        self.log_det().exp()
    }

    pub fn trace(&self) -> f64 {
        self.0.mat.trace()
    }

    /// Same point: shared storage or exactly equal matrices.
    pub fn same_as(&self, other: &SpdPoint) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.mat == other.0.mat
    }

    /// `X^{-1/2} M X^{-1/2}`.
    fn whiten(&self, m: &Mat) -> Mat {
        let s = self.inv_sqrt();
        symmetrize(&(s * m * s))
    }

    /// `X^{1/2} M X^{1/2}`.
    fn color(&self, m: &Mat) -> Mat {
        let s = self.sqrt();
        symmetrize(&(s * m * s))
    }
}

impl fmt::Debug for SpdPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("SpdPoint").field(&self.0.mat).finish()
    }
}

impl PartialEq for SpdPoint {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

/// A symmetric matrix in the tangent space at `base`.
#[derive(Clone, Debug)]
pub struct TangentVector {
    base: SpdPoint,
    vec: Mat,
}

impl TangentVector {
    pub fn new(base: &SpdPoint, vec: Mat) -> Result<Self, ManifoldError> {
        Self::with_config(base, vec, &ManifoldConfig::default())
    }

    pub fn with_config(
        base: &SpdPoint,
        vec: Mat,
        cfg: &ManifoldConfig,
    ) -> Result<Self, ManifoldError> {
        check_square(&vec)?;
        if vec.nrows() != base.dim() {
            return Err(ManifoldError::DimensionMismatch {
                expected: base.dim(),
                got: vec.nrows(),
            });
        }
        let asym = asymmetry(&vec);
        if !(asym <= cfg.sym_tol) {
            return Err(ManifoldError::NotSymmetric { asym });
        }
        if vec.iter().any(|v| !v.is_finite()) {
            return Err(ManifoldError::Degenerate);
        }
        Ok(Self::from_computed(base, vec))
    }

    pub(crate) fn from_computed(base: &SpdPoint, vec: Mat) -> Self {
        Self {
            base: base.clone(),
            vec: symmetrize(&vec),
        }
    }

    pub fn zero(base: &SpdPoint) -> Self {
        let n = base.dim();
        Self {
            base: base.clone(),
            vec: Mat::zeros(n, n),
        }
    }

    pub fn base(&self) -> &SpdPoint {
        &self.base
    }

    pub fn vec(&self) -> &Mat {
        &self.vec
    }

    pub fn into_vec(self) -> Mat {
        self.vec
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            base: self.base.clone(),
            vec: &self.vec * s,
        }
    }

    fn check_base(&self, other: &TangentVector) -> Result<(), ManifoldError> {
        if self.base.same_as(&other.base) {
            Ok(())
        } else {
            Err(ManifoldError::BaseMismatch)
        }
    }

    pub fn try_add(&self, other: &TangentVector) -> Result<Self, ManifoldError> {
        self.check_base(other)?;
        Ok(Self {
            base: self.base.clone(),
            vec: &self.vec + &other.vec,
        })
    }

    pub fn try_sub(&self, other: &TangentVector) -> Result<Self, ManifoldError> {
        self.check_base(other)?;
        Ok(Self {
            base: self.base.clone(),
            vec: &self.vec - &other.vec,
        })
    }

    /// `self + s·other`.
    pub fn try_axpy(&self, s: f64, other: &TangentVector) -> Result<Self, ManifoldError> {
        self.check_base(other)?;
        Ok(Self {
            base: self.base.clone(),
            vec: &self.vec + &other.vec * s,
        })
    }
}

fn same_size(x: &SpdPoint, y: &SpdPoint) -> Result<(), ManifoldError> {
    if x.dim() != y.dim() {
        return Err(ManifoldError::DimensionMismatch {
            expected: x.dim(),
            got: y.dim(),
        });
    }
    Ok(())
}

/// `exp_X(V) = X^{1/2} expm(X^{-1/2} V X^{-1/2}) X^{1/2}`.
pub fn exp_map(x: &SpdPoint, v: &TangentVector) -> Result<SpdPoint, ManifoldError> {
    if !v.base.same_as(x) {
        return Err(ManifoldError::BaseMismatch);
    }
    if v.vec.iter().all(|&e| e == 0.0) {
        return Ok(x.clone());
    }
    let w = SymEig::new(&x.whiten(&v.vec))?;
    let e = w.apply(f64::exp);
    if e.iter().any(|v| !v.is_finite()) {
        return Err(ManifoldError::Degenerate);
    }
    SpdPoint::from_computed(x.color(&e))
}

/// `log_X(Y) = X^{1/2} logm(X^{-1/2} Y X^{-1/2}) X^{1/2}`.
pub fn log_map(x: &SpdPoint, y: &SpdPoint) -> Result<TangentVector, ManifoldError> {
    same_size(x, y)?;
    if x.same_as(y) {
        return Ok(TangentVector::zero(x));
    }
    let w = SymEig::new(&x.whiten(y.mat()))?;
    let min_eig = w.min();
    if !(min_eig > 0.0) {
        return Err(ManifoldError::NotPositiveDefinite { min_eig });
    }
    let l = w.apply(f64::ln);
    Ok(TangentVector::from_computed(x, x.color(&l)))
}

/// `d(X, Y) = ‖logm(X^{-1/2} Y X^{-1/2})‖_F`.
pub fn distance(x: &SpdPoint, y: &SpdPoint) -> Result<f64, ManifoldError> {
    same_size(x, y)?;
    if x.same_as(y) {
        return Ok(0.0);
    }
    let w = SymEig::new(&x.whiten(y.mat()))?;
    let min_eig = w.min();
    if !(min_eig > 0.0) {
        return Err(ManifoldError::NotPositiveDefinite { min_eig });
    }
    Ok(w.values.iter().map(|m| m.ln().powi(2)).sum::<f64>().sqrt())
}

/// `⟨U, V⟩_X = tr(X⁻¹ U X⁻¹ V)`.
pub fn inner(u: &TangentVector, v: &TangentVector) -> Result<f64, ManifoldError> {
    u.check_base(v)?;
    let xinv = u.base.inv();
    let a = xinv * &u.vec;
    let b = xinv * &v.vec;
    Ok(a.component_mul(&b.transpose()).sum())
}

pub fn norm(u: &TangentVector) -> f64 {
    let w = u.base.whiten(&u.vec);
    w.norm()
}

/// Parallel transport along the geodesic from `u.base()` to `to`:
/// `Γ(U) = E U Eᵀ` with `E = (Y X⁻¹)^{1/2} = X^{1/2} (X^{-1/2} Y X^{-1/2})^{1/2} X^{-1/2}`.
pub fn parallel_transport(u: &TangentVector, to: &SpdPoint) -> Result<TangentVector, ManifoldError> {
    let x = &u.base;
    same_size(x, to)?;
    if x.same_as(to) {
        return Ok(TangentVector::from_computed(to, u.vec.clone()));
    }
    let w = SymEig::new(&x.whiten(to.mat()))?;
    let min_eig = w.min();
    if !(min_eig > 0.0) {
        return Err(ManifoldError::NotPositiveDefinite { min_eig });
    }
    let e = x.sqrt() * w.apply(f64::sqrt) * x.inv_sqrt();
    Ok(TangentVector::from_computed(to, &e * &u.vec * e.transpose()))
}

/// Riemannian gradient of `x ↦ ½ d²(x, y)`, which is `−log_x(y)`.
pub fn grad_half_sq_dist(x: &SpdPoint, y: &SpdPoint) -> Result<TangentVector, ManifoldError> {
    Ok(log_map(x, y)?.scaled(-1.0))
}

/// Converts a Euclidean gradient to the Riemannian one: `X sym(G) X`.
pub fn egrad_to_rgrad(x: &SpdPoint, euclid_grad: &Mat) -> Result<TangentVector, ManifoldError> {
    check_square(euclid_grad)?;
    if euclid_grad.nrows() != x.dim() {
        return Err(ManifoldError::DimensionMismatch {
            expected: x.dim(),
            got: euclid_grad.nrows(),
        });
    }
    let g = symmetrize(euclid_grad);
    Ok(TangentVector::from_computed(x, x.mat() * g * x.mat()))
}

fn gaussian_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Mat {
    // column-major fill order keeps the draw sequence fixed for a given seed
    Mat::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// `expm(sym(A)/2)` with `A` a standard Gaussian matrix.
pub fn random_point<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SpdPoint {
    assert!(n >= 1, "matrix size must be at least 1");
    let a = symmetrize(&gaussian_matrix(n, rng)) * 0.5;
    let e = SymEig::new(&a)
        .expect("finite gaussian matrix")
        .apply(f64::exp);
    SpdPoint::from_computed(e).expect("matrix exponential of a symmetric matrix is SPD")
}

/// Symmetric Gaussian direction at `x`.
pub fn random_tangent<R: Rng + ?Sized>(x: &SpdPoint, rng: &mut R) -> TangentVector {
    let a = symmetrize(&gaussian_matrix(x.dim(), rng));
    TangentVector::from_computed(x, a)
}

/// The SPD manifold with the affine-invariant metric.
#[derive(Debug, Clone, Copy, Default)]
pub struct Spd {
    pub config: ManifoldConfig,
}

impl HadamardManifold for Spd {
    type Point = SpdPoint;
    type Tangent = TangentVector;
    type Ambient = Mat;

    fn exp(&self, x: &SpdPoint, v: &TangentVector) -> Result<SpdPoint, ManifoldError> {
        exp_map(x, v)
    }

    fn log(&self, x: &SpdPoint, y: &SpdPoint) -> Result<TangentVector, ManifoldError> {
        log_map(x, y)
    }

    fn dist(&self, x: &SpdPoint, y: &SpdPoint) -> Result<f64, ManifoldError> {
        distance(x, y)
    }

    fn inner(&self, u: &TangentVector, v: &TangentVector) -> Result<f64, ManifoldError> {
        inner(u, v)
    }

    fn transport(&self, u: &TangentVector, to: &SpdPoint) -> Result<TangentVector, ManifoldError> {
        parallel_transport(u, to)
    }

    fn egrad_to_rgrad(&self, x: &SpdPoint, egrad: &Mat) -> Result<TangentVector, ManifoldError> {
        egrad_to_rgrad(x, egrad)
    }
}
