use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{param_error, positive, report, seeds};
use crate::error::Result;
use crate::estimators::{median, EstimatorReport};
use crate::exec::{map_replicas, Execution};
use crate::local_time::{occupation_local_time, velocity_local_time_check, DEFAULT_BANDWIDTH_FACTOR, DEFAULT_LEVEL_STEP};
use crate::paths::{
    bounce_path, simulate_kolmogorov, simulate_stopped_langevin, GenerationMode, Lifetime, PathGrid, SimOptions,
};
use crate::reflect::{check_identities, reflected_process, IdentityReport, ReflectedPath};
use crate::rng::RngStream;

/// Moment checks are reported within this many standard errors.
pub const MOMENT_TOLERANCE_SE: f64 = 4.0;
/// Required shrink factor of the local-time identity discrepancy per
/// halving of the step.
pub const LOCAL_TIME_SHRINK: f64 = 1.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateParams {
    pub steps: usize,
    pub dt: f64,
    pub seed: u64,
    pub mode: GenerationMode,
    pub v0: f64,
    /// Start the stopped process at this positive position instead.
    pub stopped_from: Option<f64>,
    pub bounce: bool,
    /// Test hook: `false` freezes the velocity at `v0`.
    pub noise: bool,
    /// Number of successive step halvings for the local-time identity
    /// study; 0 disables it.
    pub refinements: u32,
    /// Independent paths in the refinement study.
    pub replicas: u64,
    pub bandwidth_factor: f64,
    pub level_step: f64,
}

impl Default for SimulateParams {
    fn default() -> Self {
        Self {
            steps: 1_000_000,
            dt: 1e-3,
            seed: 1,
            mode: GenerationMode::Bridge,
            v0: 0.0,
            stopped_from: None,
            bounce: false,
            noise: true,
            refinements: 0,
            replicas: 1,
            bandwidth_factor: DEFAULT_BANDWIDTH_FACTOR,
            level_step: DEFAULT_LEVEL_STEP,
        }
    }
}

impl SimulateParams {
    pub fn validate(&self) -> Result<()> {
        positive("dt", self.dt)?;
        if !self.v0.is_finite() {
            return Err(param_error("v0", "must be finite"));
        }
        if let Some(x) = self.stopped_from {
            positive("stopped_from", x)?;
        }
        positive("bandwidth_factor", self.bandwidth_factor)?;
        positive("level_step", self.level_step)?;
        if self.refinements > 0 {
            if self.mode != GenerationMode::Bridge {
                return Err(param_error("mode", "refinement studies need the bridge generator"));
            }
            if self.refinements > 6 {
                return Err(param_error("refinements", "at most 6 halvings"));
            }
            super::nonzero("replicas", self.replicas)?;
            if self.steps == 0 {
                return Err(param_error("steps", "must be at least 1"));
            }
        }
        Ok(())
    }

    fn options(&self) -> SimOptions {
        SimOptions { mode: self.mode, noise: self.noise, ..SimOptions::default() }
    }
}

/// Sample moments of the exact-joint increments `(ΔW, ΔY − w dt)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncrementMoments {
    pub n: usize,
    pub var_dw: f64,
    pub var_dw_se: f64,
    pub var_fluct: f64,
    pub var_fluct_se: f64,
    pub cov: f64,
    pub cov_se: f64,
}

impl IncrementMoments {
    pub fn from_path(path: &PathGrid) -> Option<Self> {
        let n = path.len().checked_sub(1)?;
        if n < 2 {
            return None;
        }
        let h = path.step;
        let dw: Vec<f64> = path.w.windows(2).map(|p| p[1] - p[0]).collect();
        let fl: Vec<f64> = (0..n).map(|k| path.y[k + 1] - path.y[k] - path.w[k] * h).collect();
        let (var_dw, var_dw_se) = moment(&dw, &dw);
        let (var_fluct, var_fluct_se) = moment(&fl, &fl);
        let (cov, cov_se) = moment(&dw, &fl);
        Some(Self { n, var_dw, var_dw_se, var_fluct, var_fluct_se, cov, cov_se })
    }
}

/// Sample covariance and its standard error from the spread of the centred
/// products.
fn moment(a: &[f64], b: &[f64]) -> (f64, f64) {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let prods: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).collect();
    let (m, se) = crate::estimators::mean_and_stderr(&prods);
    (m * n / (n - 1.0), se)
}

/// Local-time identity discrepancy at successive halvings of the step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalTimeRefinement {
    pub steps: Vec<f64>,
    /// `discrepancies[level][replica]`.
    pub discrepancies: Vec<Vec<f64>>,
    pub medians: Vec<f64>,
    /// `medians[j] / medians[j + 1]`.
    pub ratios: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SimulateOutcome {
    pub path: PathGrid,
    pub lifetime: Option<Lifetime>,
    pub reflected: Option<ReflectedPath>,
    pub identities: Option<IdentityReport>,
    pub moments: Option<IncrementMoments>,
    pub refinement: Option<LocalTimeRefinement>,
    pub reports: Vec<EstimatorReport>,
}

pub fn run_simulate(p: &SimulateParams, exec: Execution) -> Result<SimulateOutcome> {
    p.validate()?;
    let opts = p.options();
    let stream = RngStream::new(p.seed, 0);
    let mut reports = Vec::new();
    let sm = seeds(p.seed, json!({ "path": [p.seed, 0] }));

    let (mut path, lifetime) = match p.stopped_from {
        Some(x) => {
            let opts = SimOptions { horizon_cap: p.steps as f64 * p.dt, ..opts };
            let run = simulate_stopped_langevin(x, p.v0, p.dt, &stream, &opts)?;
            (run.path, Some(run.lifetime))
        }
        None => (simulate_kolmogorov(p.steps, p.dt, 0.0, p.v0, &stream, &opts)?, None),
    };

    let mut moments = None;
    if p.stopped_from.is_none() && p.mode == GenerationMode::ExactJoint && p.noise {
        if let Some(m) = IncrementMoments::from_path(&path) {
            let h = p.dt;
            for (test, est, se, target) in [
                ("increment_variance_w", m.var_dw, m.var_dw_se, h),
                ("increment_variance_fluctuation", m.var_fluct, m.var_fluct_se, h.powi(3) / 3.0),
                ("increment_covariance", m.cov, m.cov_se, h * h / 2.0),
            ] {
                let inputs = json!({ "n": m.n, "step": h, "target": target, "tolerance_se": MOMENT_TOLERANCE_SE });
                let pass = (est - target).abs() <= MOMENT_TOLERANCE_SE * se;
                reports.push(report(test, inputs, est, None, Some(se), pass, sm.clone()));
            }
            moments = Some(m);
        }
    }

    let (mut reflected, mut identities) = (None, None);
    if p.stopped_from.is_none() && p.v0 == 0.0 {
        let rp = reflected_process(&path)?;
        let id = check_identities(&rp, &path)?;
        let violations =
            id.negative_positions + id.absorption_violations + id.velocity_mismatches + id.kept_inside_flat;
        let inputs = json!({ "samples": id.samples, "zero_samples": id.zero_samples });
        reports.push(report("discrete_identities", inputs, violations as f64, None, None, id.exact(), sm.clone()));
        reflected = Some(rp);
        identities = Some(id);
    }

    let refinement = if p.refinements > 0 { Some(local_time_refinement(p, exec)?) } else { None };
    if let Some(r) = &refinement {
        let worst = r.ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let inputs = json!({
            "steps": r.steps, "medians": r.medians, "replicas": p.replicas,
            "level_step": p.level_step, "bandwidth_factor": p.bandwidth_factor, "min_ratio": LOCAL_TIME_SHRINK,
        });
        let sm = seeds(p.seed, json!({ "paths": format!("[{}, 0..{}]", p.seed, p.replicas) }));
        reports.push(report("local_time_identity_refinement", inputs, worst, None, None, worst >= LOCAL_TIME_SHRINK, sm));
    }

    if p.bounce {
        path = bounce_path(&path);
    }
    Ok(SimulateOutcome { path, lifetime, reflected, identities, moments, refinement, reports })
}

fn local_time_refinement(p: &SimulateParams, exec: Execution) -> Result<LocalTimeRefinement> {
    let levels = p.refinements as usize + 1;
    let per_replica: Vec<Result<Vec<f64>>> = map_replicas(exec, p.replicas, |r| {
        (0..levels)
            .map(|j| {
                let h = p.dt / (1u64 << j) as f64;
                let path = simulate_kolmogorov(p.steps << j, h, 0.0, 0.0, &RngStream::new(p.seed, r), &p.options())?;
                let rp = reflected_process(&path)?;
                let lt = occupation_local_time(&path.w, h, p.bandwidth_factor * h.sqrt())?;
                Ok(velocity_local_time_check(&rp, &path, &lt, p.level_step)?.max_discrepancy)
            })
            .collect()
    });
    let per_replica = per_replica.into_iter().collect::<Result<Vec<_>>>()?;
    let discrepancies: Vec<Vec<f64>> = (0..levels).map(|j| per_replica.iter().map(|d| d[j]).collect()).collect();
    let medians: Vec<f64> = discrepancies.iter().map(|d| median(d).unwrap_or(f64::NAN)).collect();
    let ratios = medians.windows(2).map(|m| m[0] / m[1]).collect();
    Ok(LocalTimeRefinement {
        steps: (0..levels).map(|j| p.dt / (1u64 << j) as f64).collect(),
        discrepancies,
        medians,
        ratios,
    })
}
