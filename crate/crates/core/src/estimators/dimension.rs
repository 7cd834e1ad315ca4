//! Box-counting dimension of a set of times.

use serde::{Deserialize, Serialize};

use super::least_squares;
use crate::error::{invalid, Error, Result};

pub const MIN_SCALES: usize = 4;
pub const MIN_DECADES: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Strictly decreasing.
    pub scales: Vec<f64>,
    pub counts: Vec<u64>,
}

/// `n` log-spaced scales from `hi` down to `lo`.
pub fn log_scales(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (hi.ln(), lo.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1).max(1) as f64).exp()).collect()
}

/// Log-spaced scales over `[10 step, horizon / 10]`.
pub fn default_scales(step: f64, horizon: f64, n: usize) -> Vec<f64> {
    log_scales(10.0 * step, horizon / 10.0, n)
}

/// Number of boxes `[t0 + j δ, t0 + (j+1) δ)` containing at least one of the
/// sorted `times`, with `t0` the smallest time.
pub fn occupied_boxes(times: &[f64], delta: f64) -> u64 {
    let t0 = times[0];
    let mut count = 0;
    let mut last = u64::MAX;
    for &t in times {
        let b = ((t - t0) / delta).floor() as u64;
        if b != last {
            count += 1;
            last = b;
        }
    }
    count
}

fn checked_scales(scales: &[f64]) -> Result<Vec<f64>> {
    let mut scales = scales.to_vec();
    if scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(invalid("scales must be positive and finite"));
    }
    scales.sort_by(|a, b| b.total_cmp(a));
    scales.dedup();
    if scales.len() < MIN_SCALES {
        return Err(Error::InsufficientData { needed: MIN_SCALES, got: scales.len() });
    }
    let span = (scales[0] / scales[scales.len() - 1]).log10();
    if span < MIN_DECADES - 1e-9 {
        return Err(invalid(format!("scales span {span:.2} decades, need {MIN_DECADES}")));
    }
    Ok(scales)
}

fn sorted_times(zero_times: &[f64]) -> Result<Vec<f64>> {
    if zero_times.is_empty() {
        return Err(invalid("zero set is empty"));
    }
    if zero_times.iter().any(|t| !t.is_finite()) {
        return Err(invalid("zero times must be finite"));
    }
    let mut times = zero_times.to_vec();
    times.sort_by(f64::total_cmp);
    Ok(times)
}

/// Slope of `log N(δ)` against `log(1/δ)`.
pub fn box_counting_dimension(zero_times: &[f64], scales: &[f64]) -> Result<DimensionEstimate> {
    let times = sorted_times(zero_times)?;
    let scales = checked_scales(scales)?;
    let counts: Vec<u64> = scales.iter().map(|&d| occupied_boxes(&times, d)).collect();
    let lx: Vec<f64> = scales.iter().map(|d| -d.ln()).collect();
    let ly: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let (slope, intercept, r_squared) = least_squares(&lx, &ly).expect("scales are distinct");
    Ok(DimensionEstimate { slope, intercept, r_squared, scales, counts })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PooledDimensionEstimate {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub scales: Vec<f64>,
    /// Log of the replica-averaged box count `N(δ)`.
    pub log_mean_counts: Vec<f64>,
    pub replicas: usize,
}

/// Box-counting slope of several independent zero sets, fitted to the log
/// of the replica-averaged count.
pub fn pooled_box_counting_dimension(zero_sets: &[Vec<f64>], scales: &[f64]) -> Result<PooledDimensionEstimate> {
    if zero_sets.is_empty() {
        return Err(invalid("no zero sets given"));
    }
    let scales = checked_scales(scales)?;
    let mut totals = vec![0u64; scales.len()];
    for set in zero_sets {
        let times = sorted_times(set)?;
        for (acc, &d) in totals.iter_mut().zip(&scales) {
            *acc += occupied_boxes(&times, d);
        }
    }
    let log_mean_counts: Vec<f64> = totals.iter().map(|&t| (t as f64 / zero_sets.len() as f64).ln()).collect();
    let lx: Vec<f64> = scales.iter().map(|d| -d.ln()).collect();
    let (slope, intercept, r_squared) = least_squares(&lx, &log_mean_counts).expect("scales are distinct");
    Ok(PooledDimensionEstimate { slope, intercept, r_squared, scales, log_mean_counts, replicas: zero_sets.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_has_dimension_one() {
        let times: Vec<f64> = (0..=100_000).map(|i| i as f64 * 1e-5).collect();
        let est = box_counting_dimension(&times, &log_scales(1e-4, 1e-1, 8)).unwrap();
        assert!((est.slope - 1.0).abs() < 0.02, "{est:?}");
    }

    #[test]
    fn point_has_dimension_zero() {
        let est = box_counting_dimension(&[0.7], &log_scales(1e-4, 1e-1, 6)).unwrap();
        assert_eq!(est.slope, 0.0);
        assert!(est.counts.iter().all(|&c| c == 1));
    }

    #[test]
    fn scale_requirements() {
        assert!(box_counting_dimension(&[], &log_scales(1e-4, 1e-1, 6)).is_err());
        assert!(box_counting_dimension(&[0.1], &log_scales(1e-2, 1e-1, 6)).is_err());
        assert!(box_counting_dimension(&[0.1], &[0.1, 0.01, 0.001]).is_err());
    }

    #[test]
    fn pooled_matches_single_set() {
        let times: Vec<f64> = (0..1000).map(|i| i as f64 * 1e-3).collect();
        let scales = log_scales(1e-3, 0.1, 6);
        let one = box_counting_dimension(&times, &scales).unwrap();
        let pooled = pooled_box_counting_dimension(&[times.clone(), times], &scales).unwrap();
        assert!((one.slope - pooled.slope).abs() < 1e-12);
        assert!(pooled_box_counting_dimension(&[], &scales).is_err());
    }
}
