use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{param_error, positive, report, seeds};
use crate::adaptive::{AdaptiveConfig, ExcursionSampler, DEFAULT_KAPPA};
use crate::error::Result;
use crate::estimators::{default_scales, log_scales, pooled_box_counting_dimension, EstimatorReport, PooledDimensionEstimate};
use crate::exec::{map_replicas, Execution};
use crate::paths::dyadic_wiener;
use crate::rng::RngStream;

pub const ZERO_SET_DIMENSION: (f64, f64) = (0.25, 0.05);
pub const BROWNIAN_DIMENSION: (f64, f64) = (0.5, 0.05);
/// Finest calibration box, in Wiener grid steps.
pub const CALIBRATION_FINEST_BOX: f64 = 100.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DimensionParams {
    /// Reflected-clock horizon is `steps * dt`.
    pub steps: u64,
    pub dt: f64,
    pub seed: u64,
    pub replicas: u64,
    /// Box sizes; `n_scales` log-spaced sizes on `[10 dt, horizon / 10]`
    /// when absent.
    pub scales: Option<Vec<f64>>,
    pub n_scales: usize,
    pub kappa: f64,
    /// Brownian calibration: sign changes of a standard Wiener path, boxes
    /// log-spaced on `[100 calibration_dt, horizon / 10]`.
    pub calibration_steps: u64,
    pub calibration_dt: f64,
    pub calibration_replicas: u64,
}

impl Default for DimensionParams {
    fn default() -> Self {
        Self {
            steps: 1_000_000_000_000,
            dt: 1e-3,
            seed: 1,
            replicas: 400,
            scales: None,
            n_scales: 12,
            kappa: DEFAULT_KAPPA,
            calibration_steps: 1_000_000,
            calibration_dt: 1e-6,
            calibration_replicas: 200,
        }
    }
}

impl DimensionParams {
    pub fn validate(&self) -> Result<()> {
        super::nonzero("steps", self.steps)?;
        positive("dt", self.dt)?;
        super::nonzero("replicas", self.replicas)?;
        if let Some(s) = &self.scales {
            if let Some(bad) = s.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
                return Err(param_error("scales", format!("must be positive, got {bad}")));
            }
        }
        if self.n_scales < 4 {
            return Err(param_error("n_scales", "need at least 4 scales"));
        }
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(param_error("kappa", format!("must lie in (0, 1], got {}", self.kappa)));
        }
        super::nonzero("calibration_steps", self.calibration_steps)?;
        positive("calibration_dt", self.calibration_dt)?;
        super::nonzero("calibration_replicas", self.calibration_replicas)?;
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn box_scales(&self) -> Vec<f64> {
        self.scales.clone().unwrap_or_else(|| default_scales(self.dt, self.horizon(), self.n_scales))
    }
}

#[derive(Clone, Debug)]
pub struct DimensionOutcome {
    pub zero_set: PooledDimensionEstimate,
    pub brownian: PooledDimensionEstimate,
    /// Zero set of replica 0 on the reflected clock.
    pub sample_zero_times: Vec<f64>,
    pub reports: Vec<EstimatorReport>,
}

/// Grid times at which a Wiener path changes sign, including time 0.
fn sign_changes(w: &[f64], dt: f64) -> Vec<f64> {
    let mut z = vec![0.0];
    z.extend((1..w.len()).filter(|&k| w[k] == 0.0 || (w[k - 1] < 0.0) != (w[k] < 0.0)).map(|k| k as f64 * dt));
    z
}

pub fn run_dimension(p: &DimensionParams, exec: Execution) -> Result<DimensionOutcome> {
    p.validate()?;
    let horizon = p.horizon();
    let sampler = ExcursionSampler::new(AdaptiveConfig { floor_step: p.dt, kappa: p.kappa, noise: true }, vec![])?;
    let base = RngStream::new(p.seed, 0);
    let arm = base.derive(0);
    let zero_sets: Vec<Vec<f64>> = map_replicas(exec, p.replicas, |r| {
        let (ex, _) = sampler.run_until(&mut arm.with_replica(r).rng(), horizon);
        let mut z = Vec::with_capacity(ex.len() + 1);
        z.push(0.0);
        z.extend(ex.iter().map(|e| e.end_time()));
        z
    });
    let zero_set = pooled_box_counting_dimension(&zero_sets, &p.box_scales())?;

    let calib = base.derive(1);
    let calib_sets = map_replicas(exec, p.calibration_replicas, |r| {
        dyadic_wiener(p.calibration_steps as usize, p.calibration_dt, &calib.with_replica(r)).map(|w| sign_changes(&w, p.calibration_dt))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let calib_horizon = p.calibration_steps as f64 * p.calibration_dt;
    let calib_scales = log_scales(CALIBRATION_FINEST_BOX * p.calibration_dt, calib_horizon / 10.0, p.n_scales);
    let brownian = pooled_box_counting_dimension(&calib_sets, &calib_scales)?;

    let sm = seeds(p.seed, json!({ "reflected": "derive(0)", "brownian": "derive(1)" }));
    let mut reports = Vec::new();
    let (target, tol) = BROWNIAN_DIMENSION;
    let inputs = json!({ "steps": p.calibration_steps, "dt": p.calibration_dt, "replicas": p.calibration_replicas,
        "scales": brownian.scales, "target": target, "tolerance": tol, "r_squared": brownian.r_squared });
    reports.push(report("brownian_zero_set_dimension", inputs, brownian.slope, None, None, (brownian.slope - target).abs() <= tol, sm.clone()));
    let (target, tol) = ZERO_SET_DIMENSION;
    let inputs = json!({ "horizon": horizon, "floor_step": p.dt, "replicas": p.replicas,
        "scales": zero_set.scales, "target": target, "tolerance": tol, "r_squared": zero_set.r_squared });
    reports.push(report("zero_set_dimension", inputs, zero_set.slope, None, None, (zero_set.slope - target).abs() <= tol, sm));

    let sample_zero_times = zero_sets.into_iter().next().unwrap_or_default();
    Ok(DimensionOutcome { zero_set, brownian, sample_zero_times, reports })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_change_times() {
        assert_eq!(sign_changes(&[0.0, 1.0, -1.0, -2.0, 3.0], 0.5), vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn small_run() {
        let p = DimensionParams {
            steps: 1_000_000,
            replicas: 4,
            calibration_steps: 100_000,
            calibration_dt: 1e-5,
            calibration_replicas: 2,
            ..DimensionParams::default()
        };
        let out = run_dimension(&p, Execution::Sequential).unwrap();
        assert_eq!(out.reports.len(), 2);
        assert_eq!(out.sample_zero_times[0], 0.0);
        assert!(out.zero_set.slope > 0.0 && out.zero_set.slope < 1.0);
    }
}
