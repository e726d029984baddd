//! Post-run verification of the guarantees each method comes with.

use std::fmt;

use crate::problems::DcProblem;

use super::{Method, MethodConfig, SolverError, SolverRun};

/// Slack on the per-iteration decrease of the fixed-parameter methods.
pub const DECREASE_SLACK: f64 = 1e-9;
/// Slack on the accepted-step test of the adaptive method.
pub const ADAP_DECREASE_SLACK: f64 = 1e-12;
/// Floating-point noise in a difference of two objective values.
pub fn roundoff(a: f64, b: f64) -> f64 {
    16.0 * f64::EPSILON * a.abs().max(b.abs()).max(1.0)
}

/// Criticality residual accepted at an exact fixed point.
pub const FIXED_POINT_RESIDUAL: f64 = 1e-6;

/// Iteration cap implied by the sufficient decrease of each method:
/// `2(f0 − f_low)/((λ₀ − L)ε²)` for the fixed-parameter method (DCPPA is
/// the case `L = 0`) and `4(f0 − f_low)/(λ₀ε²)` for the adaptive one.
pub fn complexity_bound(
    method: Method,
    f0: f64,
    f_low: f64,
    lambda0: f64,
    lipschitz: Option<f64>,
    eps: f64,
) -> Result<f64, SolverError> {
    if !(eps > 0.0) {
        return Err(SolverError::InvalidConfig("eps must be positive".into()));
    }
    let gap = f0 - f_low;
    match method {
        Method::Rppm | Method::Dcppa => {
            let l = if method == Method::Dcppa {
                0.0
            } else {
                lipschitz.ok_or_else(|| {
                    SolverError::InvalidConfig("the R-PPM bound needs L".into())
                })?
            };
            if !(lambda0 > l) {
                return Err(SolverError::InvalidConfig(format!(
                    "lambda0 = {lambda0} must exceed L = {l}"
                )));
            }
            Ok(2.0 * gap / ((lambda0 - l) * eps * eps))
        }
        Method::Adap => {
            if !(lambda0 > 0.0) {
                return Err(SolverError::InvalidConfig("lambda0 must be positive".into()));
            }
            Ok(4.0 * gap / (lambda0 * eps * eps))
        }
        Method::Dca => Err(SolverError::InvalidConfig(
            "no iteration bound is available for DCA".into(),
        )),
    }
}

/// Number of steps with `d(x^{k+1}, x^k) > eps`.
pub fn large_step_count(run: &SolverRun, eps: f64) -> usize {
    run.trace.iter().skip(1).filter(|r| r.step_dist > eps).count()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: &'static str,
    pub k: usize,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at k={}: {}", self.kind, self.k, self.detail)
    }
}

/// Checks a finished run against the decrease, `λ`-bound, summability,
/// complexity and fixed-point properties of its method.
pub fn check_invariants(p: &DcProblem, run: &SolverRun, cfg: &MethodConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    let eps = cfg.eps_stop();
    let lipschitz = p.lipschitz_l();
    let steps = || run.trace.windows(2).map(|w| (w[0], w[1]));

    match cfg {
        MethodConfig::Rppm(c) => {
            let l = lipschitz.unwrap_or(0.0);
            let mut prev_lambda = f64::NEG_INFINITY;
            for (a, b) in steps() {
                let lam = b.lambda_k;
                let bound = a.f_val - 0.5 * (lam - l) * b.step_dist * b.step_dist + DECREASE_SLACK;
                if b.f_val > bound {
                    out.push(Violation {
                        kind: "decrease",
                        k: b.k,
                        detail: format!("f = {:e} > {:e}", b.f_val, bound),
                    });
                }
                if !(lam > l && lam <= l + c.alpha_margin && lam >= prev_lambda) {
                    out.push(Violation {
                        kind: "lambda_bound",
                        k: b.k,
                        detail: format!("lambda = {lam:e}"),
                    });
                }
                prev_lambda = lam;
            }
            // sum d² ≤ 2(f0 − min f)/(λ₀ − L)
            let lambda0 = c.lambda_at(0, l);
            let sum_sq: f64 = steps().map(|(_, b)| b.step_dist * b.step_dist).sum();
            let f_min = run.trace.iter().map(|r| r.f_val).fold(f64::INFINITY, f64::min);
            let cap = 2.0 * (run.f0 - f_min) / (lambda0 - l);
            if sum_sq > cap + 2.0 * DECREASE_SLACK * run.iterations as f64 / (lambda0 - l) {
                out.push(Violation {
                    kind: "summability",
                    k: run.iterations,
                    detail: format!("sum d^2 = {sum_sq:e} > {cap:e}"),
                });
            }
        }
        MethodConfig::Adap(c) => {
            let lambda_max = lipschitz.map(|l| 4.0 * l + c.lambda0);
            for (a, b) in steps() {
                let lam = b.lambda_k;
                // the terminating step is accepted by the tolerance test alone
                if b.step_dist > eps {
                    let lhs = b.f_val - a.f_val;
                    let rhs = -0.25 * lam * b.step_dist * b.step_dist;
                    if lhs > rhs + ADAP_DECREASE_SLACK.max(roundoff(a.f_val, b.f_val)) {
                        out.push(Violation {
                            kind: "decrease",
                            k: b.k,
                            detail: format!("f(x+) - f(x) = {lhs:e} > {rhs:e}"),
                        });
                    }
                }
                let below = lam < c.lambda0 || lam < a.lambda_k;
                let above = lambda_max.is_some_and(|m| lam > m);
                if below || above {
                    out.push(Violation {
                        kind: "lambda_bound",
                        k: b.k,
                        detail: format!("lambda = {lam:e}, bound {lambda_max:?}"),
                    });
                }
            }
        }
        MethodConfig::Dcppa(c) => {
            for (a, b) in steps() {
                let bound = a.f_val - 0.5 * c.lambda * b.step_dist * b.step_dist + DECREASE_SLACK;
                if b.f_val > bound {
                    out.push(Violation {
                        kind: "decrease",
                        k: b.k,
                        detail: format!("f = {:e} > {:e}", b.f_val, bound),
                    });
                }
            }
        }
        MethodConfig::Dca(_) => {
            for (a, b) in steps() {
                if b.f_val > a.f_val + DECREASE_SLACK {
                    out.push(Violation {
                        kind: "decrease",
                        k: b.k,
                        detail: format!("f = {:e} > {:e}", b.f_val, a.f_val),
                    });
                }
            }
        }
    }

    if let Some(f_low) = p.f_low_hint() {
        let lambda0 = cfg.lambda0(lipschitz);
        if let Ok(bound) = complexity_bound(cfg.method(), run.f0, f_low, lambda0, lipschitz, eps) {
            let count = large_step_count(run, eps);
            if count as f64 > bound {
                out.push(Violation {
                    kind: "complexity",
                    k: run.iterations,
                    detail: format!("{count} large steps > bound {bound:e}"),
                });
            }
        }
    }

    if run.trace.last().is_some_and(|r| r.k > 0 && r.step_dist == 0.0) {
        match p.criticality_residual(&run.x_final) {
            Ok(r) if r < FIXED_POINT_RESIDUAL => {}
            Ok(r) => out.push(Violation {
                kind: "fixed_point",
                k: run.iterations,
                detail: format!("criticality residual {r:e}"),
            }),
            Err(_) => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_is_zero_without_gap() {
        let b = complexity_bound(Method::Adap, 3.0, 3.0, 0.5, None, 1e-3).unwrap();
        assert_eq!(b, 0.0);
        let b = complexity_bound(Method::Rppm, 3.0, 3.0, 1.5, Some(1.0), 1e-3).unwrap();
        assert_eq!(b, 0.0);
    }

    #[test]
    fn adaptive_bound_formula() {
        let b = complexity_bound(Method::Adap, 1.0, 0.0, 1.0, None, 0.1).unwrap();
        assert!((b - 400.0).abs() < 1e-9);
        let b = complexity_bound(Method::Rppm, 1.0, 0.0, 1.5, Some(1.0), 0.1).unwrap();
        assert!((b - 400.0).abs() < 1e-9);
    }

    #[test]
    fn rppm_bound_needs_lambda_above_l() {
        assert!(complexity_bound(Method::Rppm, 1.0, 0.0, 1.0, Some(1.0), 0.1).is_err());
        assert!(complexity_bound(Method::Rppm, 1.0, 0.0, 2.0, None, 0.1).is_err());
        assert!(complexity_bound(Method::Dca, 1.0, 0.0, 2.0, None, 0.1).is_err());
        assert!(complexity_bound(Method::Adap, 1.0, 0.0, 2.0, None, 0.0).is_err());
    }
}
