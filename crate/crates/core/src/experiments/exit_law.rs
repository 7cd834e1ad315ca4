use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{param_error, positive, report, seeds};
use crate::error::Result;
use crate::estimators::{histogram_gof, EstimatorReport, GofResult};
use crate::exec::{map_replicas, Execution};
use crate::rng::RngStream;
use crate::stable::{
    default_exit_step, exit_interval, rogozin_density, rogozin_exit_probability, rogozin_mass, ExitOutcome, Side,
    StableConfig, DEFAULT_STEP_CAP,
};

pub const SIDE_TOLERANCE_SE: f64 = 4.0;
pub const GOF_LEVEL: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExitLawParams {
    pub x: f64,
    pub eps: f64,
    pub replicas: u64,
    pub seed: u64,
    pub scale: f64,
    /// Time step of the increment walk; derived from `eps` and `scale`
    /// when absent.
    pub step: Option<f64>,
    pub step_cap: u64,
    pub bins: usize,
    /// Overshoots are compared on `[eps, support_factor * eps]`.
    pub support_factor: f64,
}

impl Default for ExitLawParams {
    fn default() -> Self {
        Self {
            x: 0.5,
            eps: 1.0,
            replicas: 100_000,
            seed: 1,
            scale: 1.0,
            step: None,
            step_cap: DEFAULT_STEP_CAP,
            bins: 30,
            support_factor: 20.0,
        }
    }
}

impl ExitLawParams {
    pub fn validate(&self) -> Result<()> {
        positive("eps", self.eps)?;
        if !(self.x > 0.0 && self.x < self.eps) {
            return Err(param_error("x", format!("must lie in (0, eps), got {}", self.x)));
        }
        super::nonzero("replicas", self.replicas)?;
        positive("scale", self.scale)?;
        if let Some(s) = self.step {
            positive("step", s)?;
        }
        super::nonzero("step_cap", self.step_cap)?;
        if self.bins < 2 {
            return Err(param_error("bins", "need at least 2 bins"));
        }
        if !(self.support_factor > 1.0 && self.support_factor.is_finite()) {
            return Err(param_error("support_factor", "must exceed 1"));
        }
        Ok(())
    }

    pub fn walk_step(&self) -> f64 {
        self.step.unwrap_or_else(|| default_exit_step(self.eps, self.scale))
    }
}

#[derive(Clone, Debug)]
pub struct ExitLawOutcome {
    pub outcomes: Vec<ExitOutcome>,
    pub above: usize,
    pub below: usize,
    pub censored: usize,
    pub p_above: f64,
    pub p_exact: f64,
    pub gof: Option<GofResult>,
    pub reports: Vec<EstimatorReport>,
}

pub fn run_exit_law(p: &ExitLawParams, exec: Execution) -> Result<ExitLawOutcome> {
    p.validate()?;
    let cfg = StableConfig::new(p.scale, p.walk_step())?;
    let outcomes = map_replicas(exec, p.replicas, |r| exit_interval(p.x, p.eps, &cfg, &RngStream::new(p.seed, r), p.step_cap))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let sm = seeds(p.seed, json!({ "walks": format!("[{}, 0..{}]", p.seed, p.replicas) }));

    let above: Vec<f64> =
        outcomes.iter().filter_map(|o| o.record()).filter(|r| r.side == Side::Above).map(|r| r.position).collect();
    let exited = outcomes.iter().filter(|o| o.record().is_some()).count();
    let censored = outcomes.len() - exited;
    let below = exited - above.len();
    let p_above = above.len() as f64 / exited.max(1) as f64;
    let p_exact = rogozin_exit_probability(p.x, p.eps)?;
    let se = (p_exact * (1.0 - p_exact) / exited.max(1) as f64).sqrt();

    let mut reports = Vec::new();
    let inputs = json!({
        "x": p.x, "eps": p.eps, "exits": exited, "censored": censored, "exact": p_exact,
        "tolerance_se": SIDE_TOLERANCE_SE, "walk_step": cfg.step,
    });
    let pass = censored == 0 && (p_above - p_exact).abs() <= SIDE_TOLERANCE_SE * se;
    reports.push(report("exit_above_probability", inputs, p_above, None, Some(se), pass, sm.clone()));

    let hi = p.support_factor * p.eps;
    let mass = rogozin_mass(p.x, p.eps, p.eps, hi)?;
    let density = |y: f64| if y <= p.eps { 0.0 } else { rogozin_density(p.x, p.eps, y).unwrap_or(0.0) / mass };
    let inputs = json!({ "x": p.x, "eps": p.eps, "support": [p.eps, hi], "bins": p.bins, "level": GOF_LEVEL });
    let gof = match histogram_gof(&above, density, p.bins, (p.eps, hi)) {
        Ok(g) => {
            reports.push(report("exit_density_gof", inputs, g.chi2, Some(g.p_value), None, g.p_value > GOF_LEVEL, sm));
            Some(g)
        }
        Err(e) => {
            let mut inputs = inputs;
            inputs["error"] = json!(e.to_string());
            reports.push(report("exit_density_gof", inputs, f64::NAN, None, None, false, sm));
            None
        }
    };

    Ok(ExitLawOutcome { outcomes, above: above.len(), below, censored, p_above, p_exact, gof, reports })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let p = ExitLawParams { x: 1.5, ..ExitLawParams::default() };
        assert!(run_exit_law(&p, Execution::Sequential).unwrap_err().to_string().starts_with("invalid argument: x:"));
    }

    #[test]
    fn small_ensemble() {
        let p = ExitLawParams { replicas: 2000, ..ExitLawParams::default() };
        let out = run_exit_law(&p, Execution::Sequential).unwrap();
        assert_eq!(out.above + out.below + out.censored, 2000);
        assert!((out.p_exact - 0.5).abs() < 1e-6);
        assert_eq!(out.reports.len(), 2);
    }
}
