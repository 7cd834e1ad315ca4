//! Power-law tail estimation: Hill's estimator and a log-log fit of the
//! empirical survival function.

use serde::{Deserialize, Serialize};

use super::least_squares;
use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TailSampleSet {
    pub name: String,
    pub values: Vec<f64>,
    pub censored_count: usize,
}

impl TailSampleSet {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self { name: name.into(), values, censored_count: 0 }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Concatenate another set with the same name.
    pub fn merge(&mut self, other: TailSampleSet) {
        self.values.extend(other.values);
        self.censored_count += other.censored_count;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub index_hat: f64,
    pub stderr: f64,
    pub k: usize,
    pub n: usize,
}

/// `⌊√n⌋`.
pub fn default_k(n: usize) -> usize {
    (n as f64).sqrt().floor() as usize
}

fn sorted_positive(values: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(invalid(format!("tail samples must be positive and finite, found {bad}")));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Hill estimate of `alpha` in `P(X > x) ∝ x^(-alpha)` from the `k` largest
/// order statistics.
pub fn hill_tail_index(values: &[f64], k: usize) -> Result<TailEstimate> {
    let n = values.len();
    if k < 10 {
        return Err(invalid(format!("Hill estimator needs k >= 10, got {k}")));
    }
    if k >= n {
        return Err(Error::InsufficientData { needed: k + 1, got: n });
    }
    let v = sorted_positive(values)?;
    let threshold = v[n - k - 1].ln();
    let excess: f64 = v[n - k..].iter().map(|x| x.ln() - threshold).sum();
    if !(excess > 0.0) {
        return Err(Error::DegenerateSample("top order statistics are tied".into()));
    }
    let index_hat = k as f64 / excess;
    Ok(TailEstimate { index_hat, stderr: index_hat / (k as f64).sqrt(), k, n })
}

/// Hill estimate with `k = ⌊√n⌋`.
pub fn hill_default(values: &[f64]) -> Result<TailEstimate> {
    hill_tail_index(values, default_k(values.len()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    /// Estimates `-alpha`.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
    /// Slopes fitted separately on the two halves of the window differ by
    /// more than [`NON_POWER_LAW_SPREAD`] of the full-window slope.
    pub non_power_law: bool,
}

pub const NON_POWER_LAW_SPREAD: f64 = 0.25;
pub const MIN_FIT_POINTS: usize = 20;

/// Least-squares fit of `log S(x)` on `log x` over the order statistics
/// whose empirical quantile lies in `quantile_range`. The survival at the
/// i-th smallest of n values (1-based) is `(n - i + 0.5) / n`.
pub fn loglog_survival_fit(values: &[f64], quantile_range: (f64, f64)) -> Result<LogLogFit> {
    let (lo, hi) = quantile_range;
    if !(0.0 <= lo && lo < hi && hi <= 1.0) {
        return Err(invalid(format!("quantile window must satisfy 0 <= lower < upper <= 1, got ({lo}, {hi})")));
    }
    let v = sorted_positive(values)?;
    let n = v.len() as f64;
    let (mut lx, mut ls) = (Vec::new(), Vec::new());
    for (i, &x) in v.iter().enumerate() {
        let q = (i as f64 + 0.5) / n;
        if q >= lo && q <= hi {
            lx.push(x.ln());
            ls.push(((n - i as f64 - 0.5) / n).ln());
        }
    }
    if lx.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData { needed: MIN_FIT_POINTS, got: lx.len() });
    }
    let (slope, intercept, r_squared) = least_squares(&lx, &ls)
        .ok_or_else(|| Error::DegenerateSample("all values in the window are equal".into()))?;
    let mid = lx.len() / 2;
    let first = least_squares(&lx[..mid], &ls[..mid]);
    let second = least_squares(&lx[mid..], &ls[mid..]);
    let non_power_law = match (first, second) {
        (Some(a), Some(b)) => (a.0 - b.0).abs() > NON_POWER_LAW_SPREAD * slope.abs(),
        _ => true,
    };
    Ok(LogLogFit { slope, intercept, r_squared, points: lx.len(), non_power_law })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pareto_quantiles(alpha: f64, n: usize) -> Vec<f64> {
        (1..=n).map(|i| (1.0 - (i as f64 - 0.5) / n as f64).powf(-1.0 / alpha)).collect()
    }

    #[test]
    fn hill_on_pareto_quantiles() {
        let est = hill_tail_index(&pareto_quantiles(0.25, 10_000), 100).unwrap();
        assert!((est.index_hat - 0.25).abs() < 0.03, "{est:?}");
        assert!((est.stderr - est.index_hat / 10.0).abs() < 1e-15);
    }

    #[test]
    fn hill_rejects_bad_input() {
        assert!(matches!(hill_tail_index(&[2.0; 50], 10), Err(Error::DegenerateSample(_))));
        assert!(hill_tail_index(&[1.0, 2.0, 3.0], 10).is_err());
        assert!(hill_tail_index(&pareto_quantiles(1.0, 100), 9).is_err());
        let mut v = pareto_quantiles(1.0, 100);
        v[3] = -1.0;
        assert!(hill_tail_index(&v, 10).is_err());
    }

    #[test]
    fn loglog_on_pareto_quantiles() {
        let fit = loglog_survival_fit(&pareto_quantiles(0.5, 10_000), (0.5, 0.999)).unwrap();
        assert!((fit.slope + 0.5).abs() < 0.01, "{fit:?}");
        assert!(!fit.non_power_law);
    }

    #[test]
    fn loglog_flags_exponential() {
        let n = 10_000;
        let v: Vec<f64> = (1..=n).map(|i| -(1.0 - (i as f64 - 0.5) / n as f64).ln()).collect();
        let fit = loglog_survival_fit(&v, (0.5, 0.999)).unwrap();
        assert!(fit.non_power_law, "{fit:?}");
    }

    #[test]
    fn loglog_needs_points() {
        let v = pareto_quantiles(0.5, 1000);
        assert!(matches!(loglog_survival_fit(&v, (0.5, 0.5005)), Err(Error::InsufficientData { .. })));
        assert!(loglog_survival_fit(&v, (0.6, 0.5)).is_err());
    }
}
