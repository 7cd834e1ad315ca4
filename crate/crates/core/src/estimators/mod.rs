//! Tail-index estimation, two-sample and goodness-of-fit tests, and
//! box-counting dimension.

mod dimension;
mod gof;
mod tail;

pub use dimension::{
    box_counting_dimension, default_scales, log_scales, occupied_boxes, pooled_box_counting_dimension, DimensionEstimate,
    PooledDimensionEstimate, MIN_DECADES, MIN_SCALES,
};
pub use gof::{histogram_gof, kolmogorov_q, ks_critical_value, ks_two_sample, GofResult, KsResult};
pub use tail::{
    default_k, hill_default, hill_tail_index, loglog_survival_fit, LogLogFit, TailEstimate, TailSampleSet,
    NON_POWER_LAW_SPREAD,
};

use serde::{Deserialize, Serialize};

/// Ordinary least squares `y = slope x + intercept`. `None` when `x` is
/// constant. `r_squared` is 1 when `y` is constant.
pub fn least_squares(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = x.len() as f64;
    if x.len() < 2 || x.len() != y.len() {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Some((slope, intercept, r_squared))
}

/// Lag-one sample autocorrelation and its null standard error `1/√n`.
pub fn lag_one_correlation(values: &[f64]) -> Option<(f64, f64)> {
    let n = values.len();
    if n < 3 {
        return None;
    }
    let m = values.iter().sum::<f64>() / n as f64;
    let var: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    if var == 0.0 {
        return None;
    }
    let cov: f64 = values.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
    Some((cov / var, 1.0 / (n as f64).sqrt()))
}

/// Mean and standard error of the mean.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Sample median (average of the middle pair for even lengths).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

/// Centre on the median and divide by the interquartile range.
pub fn quantile_standardize(values: &[f64]) -> Vec<f64> {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let med = quantile(&s, 0.5);
    let iqr = quantile(&s, 0.75) - quantile(&s, 0.25);
    let iqr = if iqr > 0.0 { iqr } else { 1.0 };
    values.iter().map(|v| (v - med) / iqr).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Pass,
    Fail,
}

impl Decision {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Decision::Pass
        } else {
            Decision::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Decision::Pass
    }
}

/// Machine-readable outcome of one statistical test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub test: String,
    pub inputs: serde_json::Value,
    pub statistic: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    pub decision: Decision,
    pub seed_manifest: serde_json::Value,
}
