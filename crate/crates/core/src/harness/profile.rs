use crate::solvers::Method;

/// Dolan–Moré performance profile: `ρ_s(τ)` is the fraction of cases on
/// which method `s` has cost within a factor `τ` of the best method.
#[derive(Debug, Clone, PartialEq)]
pub struct PerfProfile {
    pub metric: String,
    pub methods: Vec<Method>,
    /// Increasing, starting at 1.
    pub taus: Vec<f64>,
    /// `rho[s][i] = ρ_s(taus[i])`.
    pub rho: Vec<Vec<f64>>,
}

impl PerfProfile {
    /// `costs[case][s]` is the cost of method `s` on a case, `None` when it
    /// failed. Failed runs get ratio `∞` and never count at finite `τ`.
    pub fn from_costs(metric: &str, methods: &[Method], costs: &[Vec<Option<f64>>]) -> Self {
        let ratios: Vec<Vec<f64>> = costs
            .iter()
            .map(|row| {
                let best = row.iter().flatten().copied().fold(f64::INFINITY, f64::min);
                row.iter()
                    .map(|c| match *c {
                        None => f64::INFINITY,
                        Some(c) if c == best => 1.0,
                        Some(c) if best > 0.0 => c / best,
                        Some(_) => f64::INFINITY,
                    })
                    .collect()
            })
            .collect();

        let mut taus: Vec<f64> = ratios.iter().flatten().copied().filter(|r| r.is_finite()).collect();
        taus.push(1.0);
        taus.sort_by(f64::total_cmp);
        taus.dedup();

        let cases = ratios.len();
        let rho = (0..methods.len())
            .map(|s| {
                let mut mine: Vec<f64> = ratios.iter().map(|row| row[s]).collect();
                mine.sort_by(f64::total_cmp);
                taus.iter()
                    .map(|&tau| {
                        if cases == 0 {
                            return 0.0;
                        }
                        mine.partition_point(|&r| r <= tau) as f64 / cases as f64
                    })
                    .collect()
            })
            .collect();

        Self {
            metric: metric.to_string(),
            methods: methods.to_vec(),
            taus,
            rho,
        }
    }

    /// `ρ_s(τ)` for an arbitrary `τ`.
    pub fn rho_at(&self, method: Method, tau: f64) -> Option<f64> {
        let s = self.methods.iter().position(|&m| m == method)?;
        let i = self.taus.partition_point(|&t| t <= tau);
        Some(if i == 0 { 0.0 } else { self.rho[s][i - 1] })
    }

    /// Every curve nondecreasing and inside `[0, 1]`.
    pub fn is_valid(&self) -> bool {
        let taus_ok = self.taus.windows(2).all(|w| w[0] < w[1]) && self.taus.first() == Some(&1.0);
        taus_ok
            && self.rho.iter().all(|curve| {
                curve.len() == self.taus.len()
                    && curve.iter().all(|r| (0.0..=1.0).contains(r))
                    && curve.windows(2).all(|w| w[0] <= w[1])
            })
    }
}
