use std::f64::consts::PI;

use crate::manifold::{Mat, SpdPoint, TangentVector};

use super::{DcParts, DcProblem, ProblemError, ProxStructure, StationarySet};

/// `f1(X) = α tr(X) + tr(X⁻¹A) + log det X − n − tr(BX)` with
/// `A = diag(1, …, n)`, `B = μA`, split as
/// `g1 = α tr(X)`, `g2 = tr(X⁻¹A) + log det X − n`, `h = tr(BX)`.
#[derive(Debug, Clone)]
pub struct F1 {
    n: usize,
    alpha: f64,
    mu: f64,
    a: Vec<f64>,
    critical: SpdPoint,
    f_low: Option<f64>,
}

impl F1 {
    pub fn new(n: usize, alpha: f64, mu: f64) -> Result<Self, ProblemError> {
        if n == 0 {
            return Err(ProblemError::InvalidParameter("n must be at least 1".into()));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(ProblemError::InvalidParameter(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        if !(mu > 0.0) {
            return Err(ProblemError::InvalidParameter(format!(
                "mu must be positive, got {mu}"
            )));
        }
        let critical = f1_critical_point(n, alpha, mu)?;
        let a = (1..=n).map(|i| i as f64).collect();
        let mut f1 = Self {
            n,
            alpha,
            mu,
            a,
            critical,
            f_low: None,
        };
        // bounded below only when every diagonal coefficient α − μi is positive
        if (1..=n).all(|i| alpha - mu * i as f64 > 0.0) {
            let x = f1.critical.clone();
            f1.f_low = Some(f1.g1(&x) + f1.g2(&x) - f1.h(&x));
        }
        Ok(f1)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn critical_point(&self) -> &SpdPoint {
        &self.critical
    }

    fn a_mat(&self) -> Mat {
        Mat::from_diagonal(&nalgebra::DVector::from_column_slice(&self.a))
    }
}

/// Closed-form critical point of `f1`: the diagonal matrix whose entries
/// solve `(α − μi)x² + x − i = 0`.
pub fn f1_critical_point(n: usize, alpha: f64, mu: f64) -> Result<SpdPoint, ProblemError> {
    let mut entries = Vec::with_capacity(n);
    for i in 1..=n {
        let fi = i as f64;
        let c = alpha - mu * fi;
        let disc = 1.0 + 4.0 * c * fi;
        if !(disc >= 0.0) {
            return Err(ProblemError::InfeasibleParameters {
                index: i,
                discriminant: disc,
            });
        }
        if c == 0.0 {
            return Err(ProblemError::InvalidParameter(format!(
                "alpha equals mu*i at i = {i}"
            )));
        }
        // (−1 + √disc)/(2c), rationalized to avoid cancellation
        entries.push(2.0 * fi / (1.0 + disc.sqrt()));
    }
    Ok(SpdPoint::diagonal(&entries)?)
}

impl DcParts for F1 {
    fn name(&self) -> &str {
        "f1"
    }

    fn n(&self) -> usize {
        self.n
    }

    fn g1(&self, x: &SpdPoint) -> f64 {
        self.alpha * x.trace()
    }

    fn g2(&self, x: &SpdPoint) -> f64 {
        let xinv = x.inv();
        let tr_inv_a: f64 = (0..self.n).map(|i| xinv[(i, i)] * self.a[i]).sum();
        tr_inv_a + x.log_det() - self.n as f64
    }

    fn h(&self, x: &SpdPoint) -> f64 {
        let m = x.mat();
        self.mu * (0..self.n).map(|i| m[(i, i)] * self.a[i]).sum::<f64>()
    }

    fn prox_g1(&self) -> ProxStructure {
        ProxStructure::Smooth
    }

    fn rgrad_g1(&self, x: &SpdPoint) -> Option<TangentVector> {
        let m = x.mat();
        Some(TangentVector::from_computed(x, m * m * self.alpha))
    }

    fn rgrad_g2(&self, x: &SpdPoint) -> TangentVector {
        // X (X⁻¹ − X⁻¹AX⁻¹) X = X − A
        TangentVector::from_computed(x, x.mat() - self.a_mat())
    }

    fn subgrad_h(&self, x: &SpdPoint) -> TangentVector {
        let m = x.mat();
        TangentVector::from_computed(x, m * self.a_mat() * m * self.mu)
    }

    fn lipschitz_l(&self) -> Option<f64> {
        Some(1.0)
    }

    fn f_low_hint(&self) -> Option<f64> {
        self.f_low
    }

    fn stationary_set(&self) -> Option<StationarySet> {
        Some(StationarySet::Point(self.critical.clone()))
    }
}

pub fn make_f1(n: usize, alpha: f64, mu: f64) -> Result<DcProblem, ProblemError> {
    Ok(DcProblem::new(F1::new(n, alpha, mu)?))
}

/// `f2(X) = t⁴/12 + t³ − t` with `t = log det X`, split as `g1 = 0`,
/// `g2 = t⁴/12 + t³`, `h = t`.
#[derive(Debug, Clone)]
pub struct F2 {
    n: usize,
    f_low: f64,
}

fn f2_profile(t: f64) -> f64 {
    t.powi(4) / 12.0 + t.powi(3) - t
}

/// Real roots of `s³ + ps + q` when all three are real, ascending.
fn depressed_cubic_roots(p: f64, q: f64) -> [f64; 3] {
    debug_assert!(4.0 * p.powi(3) + 27.0 * q * q < 0.0);
    let m = 2.0 * (-p / 3.0).sqrt();
    let theta = ((3.0 * q / (2.0 * p)) * (-3.0 / p).sqrt()).acos() / 3.0;
    let mut roots = [0.0, 1.0, 2.0].map(|k| m * (theta - 2.0 * PI * k / 3.0).cos());
    roots.sort_by(f64::total_cmp);
    roots
}

/// Real roots of `t³ + 9t² − 3`, i.e. the stationary values of
/// `t ↦ t⁴/12 + t³ − t`, ascending.
pub(crate) fn f2_stationary_log_dets() -> [f64; 3] {
    // t = s − 3 gives s³ − 27s + 51
    depressed_cubic_roots(-27.0, 51.0).map(|s| s - 3.0)
}

/// Determinants of the critical points of `f2`: `e^{t}` for every real
/// root `t` of `t³ + 9t² − 3`, ascending.
pub fn f2_stationary_dets() -> Vec<f64> {
    f2_stationary_log_dets().iter().map(|t| t.exp()).collect()
}

impl F2 {
    pub fn new(n: usize) -> Result<Self, ProblemError> {
        if n == 0 {
            return Err(ProblemError::InvalidParameter("n must be at least 1".into()));
        }
        let f_low = f2_stationary_log_dets()
            .iter()
            .map(|&t| f2_profile(t))
            .fold(f64::INFINITY, f64::min);
        Ok(Self { n, f_low })
    }
}

impl DcParts for F2 {
    fn name(&self) -> &str {
        "f2"
    }

    fn n(&self) -> usize {
        self.n
    }

    fn g1(&self, _: &SpdPoint) -> f64 {
        0.0
    }

    fn g2(&self, x: &SpdPoint) -> f64 {
        let t = x.log_det();
        t.powi(4) / 12.0 + t.powi(3)
    }

    fn h(&self, x: &SpdPoint) -> f64 {
        x.log_det()
    }

    fn prox_g1(&self) -> ProxStructure {
        ProxStructure::Zero
    }

    fn rgrad_g1(&self, x: &SpdPoint) -> Option<TangentVector> {
        Some(TangentVector::zero(x))
    }

    fn rgrad_g2(&self, x: &SpdPoint) -> TangentVector {
        let t = x.log_det();
        TangentVector::from_computed(x, x.mat() * (t.powi(3) / 3.0 + 3.0 * t * t))
    }

    fn subgrad_h(&self, x: &SpdPoint) -> TangentVector {
        TangentVector::from_computed(x, x.mat().clone())
    }

    fn f_low_hint(&self) -> Option<f64> {
        Some(self.f_low)
    }

    fn stationary_set(&self) -> Option<StationarySet> {
        Some(StationarySet::DetLevels(f2_stationary_dets()))
    }
}

pub fn make_f2(n: usize) -> Result<DcProblem, ProblemError> {
    Ok(DcProblem::new(F2::new(n)?))
}

/// `f3(X) = t⁴ − t²` with `t = log det X`, split as `g1 = t⁴`, `g2 = 0`,
/// `h = t²`.
#[derive(Debug, Clone)]
pub struct F3 {
    n: usize,
}

impl F3 {
    pub fn new(n: usize) -> Result<Self, ProblemError> {
        if n == 0 {
            return Err(ProblemError::InvalidParameter("n must be at least 1".into()));
        }
        Ok(Self { n })
    }
}

/// `{e^{−√2/2}, 1, e^{√2/2}}`.
pub fn f3_stationary_dets() -> Vec<f64> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    vec![(-r).exp(), 1.0, r.exp()]
}

impl DcParts for F3 {
    fn name(&self) -> &str {
        "f3"
    }

    fn n(&self) -> usize {
        self.n
    }

    fn g1(&self, x: &SpdPoint) -> f64 {
        x.log_det().powi(4)
    }

    fn g2(&self, _: &SpdPoint) -> f64 {
        0.0
    }

    fn h(&self, x: &SpdPoint) -> f64 {
        x.log_det().powi(2)
    }

    fn prox_g1(&self) -> ProxStructure {
        ProxStructure::Smooth
    }

    fn rgrad_g1(&self, x: &SpdPoint) -> Option<TangentVector> {
        let t = x.log_det();
        Some(TangentVector::from_computed(x, x.mat() * (4.0 * t.powi(3))))
    }

    fn rgrad_g2(&self, x: &SpdPoint) -> TangentVector {
        TangentVector::zero(x)
    }

    fn subgrad_h(&self, x: &SpdPoint) -> TangentVector {
        let t = x.log_det();
        TangentVector::from_computed(x, x.mat() * (2.0 * t))
    }

    fn lipschitz_l(&self) -> Option<f64> {
        Some(0.0)
    }

    fn f_low_hint(&self) -> Option<f64> {
        Some(-0.25)
    }

    fn stationary_set(&self) -> Option<StationarySet> {
        Some(StationarySet::DetLevels(f3_stationary_dets()))
    }
}

pub fn make_f3(n: usize) -> Result<DcProblem, ProblemError> {
    Ok(DcProblem::new(F3::new(n)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{exp_map, norm, TangentVector};

    /// Bisection on a sign change, to `tol` in the argument.
    fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
        assert!(f(lo) * f(hi) < 0.0);
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn cubic(t: f64) -> f64 {
        t.powi(3) + 9.0 * t * t - 3.0
    }

    #[test]
    fn f1_value_at_identity() {
        let p = make_f1(2, 0.5, 0.05).unwrap();
        let v = p.eval_f(&SpdPoint::identity(2));
        assert!((v - 1.85).abs() < 1e-14);
    }

    #[test]
    fn f1_g2_gradient_vanishes_at_a() {
        let p = make_f1(3, 0.5, 0.01).unwrap();
        let a = SpdPoint::diagonal(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(p.rgrad_g2(&a).vec().norm(), 0.0);
    }

    #[test]
    fn f1_critical_point_scalar_case() {
        let x = f1_critical_point(1, 0.5, 0.05).unwrap().mat()[(0, 0)];
        let expected = (-1.0 + 2.8f64.sqrt()) / 0.9;
        assert!((x - expected).abs() < 1e-15);
        assert!(((0.5 - 0.05) * x * x + x - 1.0).abs() < 1e-12);
    }

    #[test]
    fn f1_critical_point_matches_printed_formula_and_residual() {
        let (alpha, mu) = (0.5, 0.01);
        let x = f1_critical_point(10, alpha, mu).unwrap();
        for i in 1..=10 {
            let fi = i as f64;
            let c = alpha - mu * fi;
            let printed = (-1.0 + (1.0 + 4.0 * c * fi).sqrt()) / (2.0 * c);
            let xi = x.mat()[(i - 1, i - 1)];
            assert!((xi - printed).abs() < 1e-12 * printed);
            let residual = alpha * xi * xi + xi - fi - mu * fi * xi * xi;
            assert!(residual.abs() < 1e-10);
        }
        let p = make_f1(10, alpha, mu).unwrap();
        assert!(p.criticality_residual(&x).unwrap() < 1e-8);
    }

    #[test]
    fn f1_rejects_mu_two() {
        // α = 0.5, μ = 2.0 gives 1 + 4(α − 2i)i < 0 already at i = 1
        match make_f1(10, 0.5, 2.0) {
            Err(ProblemError::InfeasibleParameters { index, discriminant }) => {
                assert_eq!(index, 1);
                assert!((discriminant - (1.0 + 4.0 * (0.5 - 2.0))).abs() < 1e-14);
            }
            other => panic!("expected infeasibility, got {other:?}"),
        }
        assert!(make_f1(3, 1.5, 0.01).is_err());
        assert!(make_f1(3, 0.5, -1.0).is_err());
    }

    #[test]
    fn f1_low_hint_is_value_at_critical_point() {
        let p = make_f1(4, 0.5, 0.01).unwrap();
        let x = f1_critical_point(4, 0.5, 0.01).unwrap();
        assert_eq!(p.f_low_hint(), Some(p.eval_f(&x)));
        assert!(p.eval_f(&SpdPoint::identity(4)) > p.f_low_hint().unwrap());
    }

    #[test]
    fn f2_value_at_identity() {
        assert_eq!(make_f2(3).unwrap().eval_f(&SpdPoint::identity(3)), 0.0);
    }

    #[test]
    fn f2_dets_match_bisection() {
        let roots = [
            bisect(cubic, -10.0, -5.0, 1e-12),
            bisect(cubic, -1.0, 0.0, 1e-12),
            bisect(cubic, 0.0, 1.0, 1e-12),
        ];
        let dets = f2_stationary_dets();
        assert_eq!(dets.len(), 3);
        for (d, t) in dets.iter().zip(roots) {
            assert!((d.ln() - t).abs() < 1e-10, "{d} vs e^{t}");
        }
        let positive = dets[2];
        assert!((positive - 1.751).abs() < 1e-3);
        // the reference value 1.756 is within 0.01 of the computed one
        assert!((1.756 - positive).abs() < 1e-2);
    }

    #[test]
    fn f2_cubic_has_three_sign_changes() {
        let grid: Vec<f64> = (-1000..=1000).map(|k| k as f64 * 0.02).collect();
        let changes = grid
            .windows(2)
            .filter(|w| cubic(w[0]) * cubic(w[1]) < 0.0)
            .count();
        assert_eq!(changes, 3);
    }

    #[test]
    fn f2_stationary_gradient_balance() {
        let n = 4;
        let p = make_f2(n).unwrap();
        let t = bisect(cubic, 0.0, 1.0, 1e-14);
        let x = SpdPoint::scaled_identity(n, (t / n as f64).exp());
        let diff = p.rgrad_g2(&x).try_sub(&p.subgrad_h(&x)).unwrap();
        assert!(norm(&diff) < 1e-8);
        assert!(p.criticality_residual(&x).unwrap() < 1e-8);

        // same point reached through the exponential map at the identity
        let id = SpdPoint::identity(n);
        let s = t / n as f64;
        let v = TangentVector::new(&id, Mat::identity(n, n) * s).unwrap();
        let y = exp_map(&id, &v).unwrap();
        assert!(p.criticality_residual(&y).unwrap() < 1e-8);
    }

    #[test]
    fn f2_low_hint_is_global_minimum_of_profile() {
        let low = make_f2(2).unwrap().f_low_hint().unwrap();
        let grid_min = (-20000..=20000)
            .map(|k| f2_profile(k as f64 * 1e-3))
            .fold(f64::INFINITY, f64::min);
        assert!(low <= grid_min + 1e-9);
        assert!(grid_min - low < 1e-4);
    }

    #[test]
    fn f3_values_and_criticality() {
        let p = make_f3(3).unwrap();
        let id = SpdPoint::identity(3);
        assert_eq!(p.eval_f(&id), 0.0);
        assert_eq!(p.criticality_residual(&id).unwrap(), 0.0);
        assert_eq!(p.eval_g2(&id), 0.0);
        assert_eq!(p.rgrad_g2(&id).vec().norm(), 0.0);
        assert_eq!(p.lipschitz_l(), Some(0.0));
    }

    #[test]
    fn f3_scalar_derivative_roots() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let dets = f3_stationary_dets();
        assert!((dets[0] - (-r).exp()).abs() < 1e-15);
        assert!((dets[2] - r.exp()).abs() < 1e-15);
        let p = make_f3(2).unwrap();
        for t in [0.0, r, -r] {
            let x = SpdPoint::scaled_identity(2, (t / 2.0).exp());
            let g1 = p.rgrad_g1(&x).unwrap();
            let diff = g1.try_sub(&p.subgrad_h(&x)).unwrap();
            assert!(diff.vec().norm() < 1e-12, "t = {t}");
        }
    }
}
