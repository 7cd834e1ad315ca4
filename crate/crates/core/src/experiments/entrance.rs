use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{param_error, positive, report, seeds};
use crate::adaptive::{AdaptiveConfig, DEFAULT_KAPPA};
use crate::error::Result;
use crate::estimators::{least_squares, EstimatorReport};
use crate::excursions::{entrance_scaling_probe, EntrancePoint};
use crate::exec::Execution;
use crate::rng::RngStream;
use crate::stable::rogozin_exit_probability;

pub const ENTRANCE_SLOPE: (f64, f64) = (1.0 / 6.0, 0.02);
pub const EXACT_TOLERANCE_SE: f64 = 4.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EntranceParams {
    pub xs: Vec<f64>,
    pub threshold: f64,
    pub replicas: u64,
    /// Floor step of the adaptive engine.
    pub dt: f64,
    pub seed: u64,
    pub kappa: f64,
}

impl Default for EntranceParams {
    fn default() -> Self {
        Self { xs: vec![0.01, 0.04, 0.16], threshold: 1.0, replicas: 100_000, dt: 1e-6, seed: 1, kappa: DEFAULT_KAPPA }
    }
}

impl EntranceParams {
    pub fn validate(&self) -> Result<()> {
        positive("threshold", self.threshold)?;
        if self.xs.len() < 2 {
            return Err(param_error("xs", "need at least two start positions"));
        }
        if let Some(x) = self.xs.iter().find(|x| !(**x > 0.0 && **x < self.threshold)) {
            return Err(param_error("xs", format!("must lie in (0, threshold), got {x}")));
        }
        super::nonzero("replicas", self.replicas)?;
        positive("dt", self.dt)?;
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(param_error("kappa", format!("must lie in (0, 1], got {}", self.kappa)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct EntranceOutcome {
    pub points: Vec<EntrancePoint>,
    pub exact: Vec<f64>,
    pub slope: f64,
    pub reports: Vec<EstimatorReport>,
}

pub fn run_entrance(p: &EntranceParams, exec: Execution) -> Result<EntranceOutcome> {
    p.validate()?;
    let cfg = AdaptiveConfig { floor_step: p.dt, kappa: p.kappa, noise: true };
    let points = entrance_scaling_probe(&p.xs, p.threshold, p.replicas, &cfg, &RngStream::new(p.seed, 0), exec)?;
    let exact = p.xs.iter().map(|x| rogozin_exit_probability(*x, p.threshold)).collect::<Result<Vec<_>>>()?;
    let sm = seeds(p.seed, json!({ "start_i": "derive(i)" }));
    let mut reports = Vec::new();

    let lx: Vec<f64> = points.iter().map(|q| q.x.ln()).collect();
    let lp: Vec<f64> = points.iter().map(|q| q.probability.ln()).collect();
    let (target, tol) = ENTRANCE_SLOPE;
    let inputs = json!({
        "xs": p.xs, "threshold": p.threshold, "replicas": p.replicas,
        "probabilities": points.iter().map(|q| q.probability).collect::<Vec<_>>(),
        "censored": points.iter().map(|q| q.censored).collect::<Vec<_>>(),
        "target": target, "tolerance": tol,
    });
    let slope = match least_squares(&lx, &lp) {
        Some((s, _, _)) if s.is_finite() => s,
        _ => f64::NAN,
    };
    reports.push(report("entrance_slope", inputs, slope, None, None, (slope - target).abs() <= tol, sm.clone()));

    let worst = points
        .iter()
        .zip(&exact)
        .map(|(q, e)| (q.probability - e).abs() / (e * (1.0 - e) / q.replicas as f64).sqrt())
        .fold(0.0, f64::max);
    let inputs = json!({ "exact": exact, "tolerance_se": EXACT_TOLERANCE_SE });
    reports.push(report("entrance_vs_exact", inputs, worst, None, None, worst <= EXACT_TOLERANCE_SE, sm));

    Ok(EntranceOutcome { points, exact, slope, reports })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_probe() {
        let p = EntranceParams { replicas: 200, dt: 1e-4, ..EntranceParams::default() };
        let out = run_entrance(&p, Execution::Sequential).unwrap();
        assert_eq!(out.points.len(), 3);
        assert!(out.exact.windows(2).all(|e| e[0] < e[1]));
        assert_eq!(out.reports.len(), 2);
    }

    #[test]
    fn start_outside_interval_rejected() {
        let p = EntranceParams { xs: vec![0.1, 2.0], ..EntranceParams::default() };
        assert!(p.validate().unwrap_err().to_string().contains("xs"));
    }
}
