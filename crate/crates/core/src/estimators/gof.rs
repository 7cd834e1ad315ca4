//! Two-sample Kolmogorov–Smirnov and binned chi-square goodness of fit.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{invalid, Error, Result};
use crate::quad;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Asymptotic Kolmogorov tail `Q(λ) = 2 Σ (-1)^(j-1) exp(-2 j² λ²)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(invalid("both samples must be non-empty"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = na * nb / (na + nb);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    Ok(KsResult { statistic: d, p_value: kolmogorov_q(lambda) })
}

/// Asymptotic critical value of the two-sample statistic at level `alpha`.
pub fn ks_critical_value(n: usize, m: usize, alpha: f64) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub chi2: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Samples falling inside the support.
    pub n: usize,
    /// Bins remaining after merging sparse ones.
    pub bins_used: usize,
}

pub const NORMALIZATION_TOL: f64 = 1e-6;
pub const MIN_EXPECTED: f64 = 5.0;

/// Pearson chi-square of `samples` against `density` on `bins` equal-width
/// bins over `support`. Samples outside the support are ignored, so the
/// density must be normalised on the support itself. Adjacent bins are
/// merged left to right until each expects at least [`MIN_EXPECTED`].
pub fn histogram_gof<F: Fn(f64) -> f64>(samples: &[f64], density: F, bins: usize, support: (f64, f64)) -> Result<GofResult> {
    let (lo, hi) = support;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(invalid(format!("support must be a finite interval, got ({lo}, {hi})")));
    }
    if bins < 2 {
        return Err(invalid(format!("need at least 2 bins, got {bins}")));
    }
    let total = quad::integrate_singular(&density, lo, hi, 1e-10)
        .map_err(|e| Error::InvalidDensity(format!("normalization quadrature failed: {e}")))?;
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::InvalidDensity(format!("density integrates to {total} on the support")));
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    let mut n = 0usize;
    for &s in samples {
        if s >= lo && s <= hi {
            let b = (((s - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let mut masses = Vec::with_capacity(bins);
    for b in 0..bins {
        let a = lo + b as f64 * width;
        let e = if b + 1 == bins { hi } else { a + width };
        masses.push(quad::integrate_singular(&density, a, e, 1e-12)?);
    }
    let mass_sum: f64 = masses.iter().sum();

    let mut merged: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (&c, &m) in counts.iter().zip(&masses) {
        acc.0 += c as f64;
        acc.1 += m / mass_sum * n as f64;
        if acc.1 >= MIN_EXPECTED {
            merged.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.1 > 0.0 || acc.0 > 0.0 {
        match merged.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => merged.push(acc),
        }
    }
    if merged.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: merged.len() });
    }
    let chi2: f64 = merged.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = merged.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::NumericFailure(e.to_string()))?;
    Ok(GofResult { chi2, dof, p_value: dist.sf(chi2), n, bins_used: merged.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_identical() {
        let a = [0.3, 1.0, 2.0, 2.0];
        let r = ks_two_sample(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn ks_disjoint() {
        let r = ks_two_sample(&[0.0], &[1.0]).unwrap();
        assert_eq!(r.statistic, 1.0);
        assert!(ks_two_sample(&[], &[1.0]).is_err());
    }

    #[test]
    fn kolmogorov_tail_values() {
        // Q(1.3581) ≈ 0.05, Q(1.6276) ≈ 0.01.
        assert!((kolmogorov_q(1.3581) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_q(1.6276) - 0.01).abs() < 1e-3);
        assert!((ks_critical_value(100, 100, 0.05) - 1.3581 * 0.02f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn gof_point_mass_rejected() {
        let samples = vec![0.5; 1000];
        let r = histogram_gof(&samples, |_| 1.0, 10, (0.0, 1.0)).unwrap();
        assert!(r.p_value < 1e-10);
    }

    #[test]
    fn gof_unnormalised() {
        let r = histogram_gof(&[0.5], |_| 2.0, 10, (0.0, 1.0));
        assert!(matches!(r, Err(Error::InvalidDensity(_))));
    }

    #[test]
    fn gof_exact_quantiles_fit() {
        let n = 10_000;
        let samples: Vec<f64> = (0..n).map(|i| ((i as f64 + 0.5) / n as f64).sqrt()).collect();
        let r = histogram_gof(&samples, |x| 2.0 * x, 20, (0.0, 1.0)).unwrap();
        assert!(r.p_value > 0.99, "{r:?}");
        assert_eq!(r.dof, r.bins_used - 1);
    }

    #[test]
    fn gof_merges_sparse_bins() {
        let samples: Vec<f64> = (0..40).map(|i| (i as f64 + 0.5) / 40.0).collect();
        let r = histogram_gof(&samples, |_| 1.0, 30, (0.0, 1.0)).unwrap();
        assert!(r.bins_used < 30);
    }
}
