use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{hill_report, param_error, positive, report, seeds};
use crate::adaptive::{run_stopped, AdaptiveConfig, ExcursionSampler, StopOutcome, DEFAULT_KAPPA};
use crate::error::Result;
use crate::estimators::{ks_two_sample, EstimatorReport};
use crate::exec::{map_replicas, Execution};
use crate::rng::RngStream;

pub const KS_LEVEL: f64 = 0.01;
pub const LIFETIME_INDEX: (f64, f64) = (0.25, 0.05);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingParams {
    /// Time-scaling factor `a`: `a^(-3/2) X(a t)` is compared with `X(t)`.
    pub factor: f64,
    pub replicas: u64,
    /// Reflected time `t = steps * dt`.
    pub steps: u64,
    /// Floor step of the reflected engine.
    pub dt: f64,
    pub seed: u64,
    pub kappa: f64,
    /// Stopped process started at `(stopped_start, 0)` is compared with the
    /// one started at `(1, 0)` through `ζ ↦ stopped_start^(-2/3) ζ`.
    pub stopped_start: f64,
    /// Lifetimes from `(1, 0)`; all of them enter the tail estimate.
    pub stopped_replicas: u64,
    /// Lifetimes per arm in the two-sample comparison.
    pub stopped_ks_samples: u64,
    pub stopped_dt: f64,
    pub time_cap: f64,
    pub hill_k: Option<usize>,
}

impl Default for ScalingParams {
    fn default() -> Self {
        Self {
            factor: 4.0,
            replicas: 10_000,
            steps: 100_000,
            dt: 1e-5,
            seed: 1,
            kappa: DEFAULT_KAPPA,
            stopped_start: 8.0,
            stopped_replicas: 100_000,
            stopped_ks_samples: 10_000,
            stopped_dt: 1e-4,
            time_cap: 1e30,
            hill_k: None,
        }
    }
}

impl ScalingParams {
    pub fn validate(&self) -> Result<()> {
        positive("factor", self.factor)?;
        super::nonzero("replicas", self.replicas)?;
        super::nonzero("steps", self.steps)?;
        positive("dt", self.dt)?;
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(param_error("kappa", format!("must lie in (0, 1], got {}", self.kappa)));
        }
        positive("stopped_start", self.stopped_start)?;
        super::nonzero("stopped_replicas", self.stopped_replicas)?;
        super::nonzero("stopped_ks_samples", self.stopped_ks_samples)?;
        if self.stopped_ks_samples > self.stopped_replicas {
            return Err(param_error("stopped_ks_samples", "cannot exceed stopped_replicas"));
        }
        positive("stopped_dt", self.stopped_dt)?;
        positive("time_cap", self.time_cap)?;
        Ok(())
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.dt
    }
}

#[derive(Clone, Debug)]
pub struct ScalingOutcome {
    pub x_t: Vec<f64>,
    /// `a^(-3/2) X(a t)`.
    pub x_at_scaled: Vec<f64>,
    /// Observed lifetimes from `(1, 0)`.
    pub zeta_1: Vec<f64>,
    /// Observed lifetimes from `(stopped_start, 0)`, times `stopped_start^(-2/3)`.
    pub zeta_scaled: Vec<f64>,
    pub censored: [usize; 2],
    pub reports: Vec<EstimatorReport>,
}

fn lifetimes(p: &ScalingParams, x: f64, arm: u64, n: u64, exec: Execution) -> Result<(Vec<f64>, usize)> {
    let cfg = AdaptiveConfig { floor_step: p.stopped_dt, kappa: p.kappa, noise: true };
    let stream = RngStream::new(p.seed, 0).derive(arm);
    let out = map_replicas(exec, n, |r| run_stopped(x, 0.0, f64::INFINITY, &cfg, &mut stream.with_replica(r).rng(), p.time_cap));
    let mut observed = Vec::with_capacity(out.len());
    let mut censored = 0;
    for o in out {
        match o? {
            StopOutcome::Hit { time, .. } => observed.push(time),
            _ => censored += 1,
        }
    }
    Ok((observed, censored))
}

pub fn run_scaling(p: &ScalingParams, exec: Execution) -> Result<ScalingOutcome> {
    p.validate()?;
    let sampler = ExcursionSampler::new(AdaptiveConfig { floor_step: p.dt, kappa: p.kappa, noise: true }, vec![])?;
    let t = p.time();
    let base = RngStream::new(p.seed, 0);
    let (s0, s1) = (base.derive(0), base.derive(1));
    let x_t = map_replicas(exec, p.replicas, |r| sampler.position_at(&mut s0.with_replica(r).rng(), t));
    let shrink = p.factor.powf(-1.5);
    let x_at_scaled =
        map_replicas(exec, p.replicas, |r| shrink * sampler.position_at(&mut s1.with_replica(r).rng(), p.factor * t));

    let mut reports = Vec::new();
    let sm = seeds(p.seed, json!({ "x_t": "derive(0)", "x_at": "derive(1)", "zeta_1": "derive(2)", "zeta_start": "derive(3)" }));
    let ks = ks_two_sample(&x_t, &x_at_scaled)?;
    let inputs = json!({ "factor": p.factor, "time": t, "n": p.replicas, "level": KS_LEVEL });
    reports.push(report("time_scaling_ks", inputs, ks.statistic, Some(ks.p_value), None, ks.p_value > KS_LEVEL, sm.clone()));

    let (zeta_1, c1) = lifetimes(p, 1.0, 2, p.stopped_replicas, exec)?;
    let (zeta_s, c2) = lifetimes(p, p.stopped_start, 3, p.stopped_ks_samples, exec)?;
    let zeta_scaled: Vec<f64> = zeta_s.iter().map(|z| z * p.stopped_start.powf(-2.0 / 3.0)).collect();
    let head = &zeta_1[..zeta_1.len().min(p.stopped_ks_samples as usize)];
    let inputs = json!({ "start": p.stopped_start, "n": [head.len(), zeta_scaled.len()], "censored": [c1, c2], "level": KS_LEVEL });
    match ks_two_sample(head, &zeta_scaled) {
        Ok(ks) => reports.push(report(
            "stopped_lifetime_scaling_ks",
            inputs,
            ks.statistic,
            Some(ks.p_value),
            None,
            ks.p_value > KS_LEVEL,
            sm.clone(),
        )),
        Err(_) => reports.push(report("stopped_lifetime_scaling_ks", inputs, f64::NAN, None, None, false, sm.clone())),
    }
    let (target, tol) = LIFETIME_INDEX;
    reports.push(hill_report("stopped_lifetime_hill", &zeta_1, p.hill_k, target, tol, sm));

    Ok(ScalingOutcome { x_t, x_at_scaled, zeta_1, zeta_scaled, censored: [c1, c2], reports })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_shapes() {
        let p = ScalingParams {
            replicas: 200,
            steps: 1000,
            dt: 1e-3,
            stopped_replicas: 300,
            stopped_ks_samples: 100,
            stopped_dt: 1e-3,
            ..ScalingParams::default()
        };
        let out = run_scaling(&p, Execution::Sequential).unwrap();
        assert_eq!(out.x_t.len(), 200);
        assert!(out.x_t.iter().chain(&out.x_at_scaled).all(|x| *x >= 0.0));
        assert_eq!(out.zeta_1.len() + out.censored[0], 300);
        assert_eq!(out.reports.len(), 3);
        let bad = ScalingParams { stopped_ks_samples: 10, stopped_replicas: 5, ..ScalingParams::default() };
        assert!(bad.validate().is_err());
    }
}
