use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{hill_report, param_error, positive, report, seeds};
use crate::adaptive::{AdaptiveConfig, ExcursionSampler, DEFAULT_KAPPA};
use crate::error::Result;
use crate::estimators::{histogram_gof, lag_one_correlation, median, EstimatorReport, GofResult};
use crate::exec::{map_replicas, Execution};
use crate::excursions::{
    count_above, energy_process, excursion_tails, extract_excursions, filter_by_height, rho_passage, tail_stats,
    ExcursionSummary, TailStats,
};
use crate::paths::{simulate_kolmogorov, SimOptions};
use crate::reflect::reflected_process;
use crate::rng::RngStream;
use crate::stable::{beta, ALPHA};

pub const RATIO_LOW: f64 = 0.1;
pub const RATIO_HIGH: f64 = 0.4;
pub const RATIO_TOLERANCE: f64 = 0.15;
pub const MIN_TAIL_SAMPLE: usize = 10_000;
pub const D_SHRINK: f64 = 1.5;
pub const GOF_LEVEL: f64 = 0.01;
pub const CORRELATION_TOLERANCE_SE: f64 = 4.0;

/// `(target, tolerance)` for the Hill index of each tail.
pub const HEIGHT_INDEX: (f64, f64) = (1.0 / 6.0, 0.03);
pub const LIFETIME_INDEX: (f64, f64) = (0.25, 0.04);
pub const SPEED_INDEX: (f64, f64) = (0.5, 0.05);
pub const ENERGY_INDEX: (f64, f64) = (0.25, 0.05);

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// State-dependent exact steps on the reflected clock; `steps` is a
    /// budget of Gaussian transitions per replica.
    #[default]
    Adaptive,
    /// Uniform bridge grid reflected after the fact; `steps` grid steps.
    Grid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExcursionParams {
    pub steps: u64,
    pub dt: f64,
    pub seed: u64,
    pub replicas: u64,
    pub engine: Engine,
    pub kappa: f64,
    /// Excursions lower than this are left out of the tail sets.
    pub min_height: f64,
    /// Hill order count; `⌊√N⌋` when absent.
    pub hill_k: Option<usize>,
    /// Passage level for the entrance-density check.
    pub rho_eps: Option<f64>,
    pub gof_bins: usize,
    /// Grid engine only: median first velocity zero at `dt` and `dt / 4` on
    /// the same bridge path.
    pub refinement: bool,
    pub d_min_height: f64,
}

impl Default for ExcursionParams {
    fn default() -> Self {
        Self {
            steps: 10_000_000,
            dt: 1e-3,
            seed: 1,
            replicas: 1,
            engine: Engine::Adaptive,
            kappa: DEFAULT_KAPPA,
            min_height: 0.0,
            hill_k: None,
            rho_eps: None,
            gof_bins: 30,
            refinement: false,
            d_min_height: 0.1,
        }
    }
}

impl ExcursionParams {
    pub fn validate(&self) -> Result<()> {
        super::nonzero("steps", self.steps)?;
        positive("dt", self.dt)?;
        super::nonzero("replicas", self.replicas)?;
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(param_error("kappa", format!("must lie in (0, 1], got {}", self.kappa)));
        }
        if !(self.min_height >= 0.0 && self.min_height.is_finite()) {
            return Err(param_error("min_height", format!("must be nonnegative, got {}", self.min_height)));
        }
        if let Some(k) = self.hill_k {
            if k < 10 {
                return Err(param_error("hill_k", format!("must be at least 10, got {k}")));
            }
        }
        if let Some(e) = self.rho_eps {
            positive("rho_eps", e)?;
        }
        if self.gof_bins < 2 {
            return Err(param_error("gof_bins", "need at least 2 bins"));
        }
        if self.refinement && self.engine != Engine::Grid {
            return Err(param_error("refinement", "needs the grid engine"));
        }
        positive("d_min_height", self.d_min_height)?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicaCounts {
    pub replica: u64,
    pub excursions: usize,
    pub censored: usize,
    pub above_low: usize,
    pub above_high: usize,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VelocityZeroRefinement {
    pub coarse_step: f64,
    pub fine_step: f64,
    pub coarse_count: usize,
    pub fine_count: usize,
    pub coarse_median: f64,
    pub fine_median: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug)]
pub struct ExcursionOutcome {
    /// All complete excursions, replica by replica.
    pub excursions: Vec<ExcursionSummary>,
    pub per_replica: Vec<ReplicaCounts>,
    pub tails: Vec<TailStats>,
    /// `e(ρ_ε) / ε` for every excursion that reaches the passage level.
    pub rho_ratios: Vec<f64>,
    pub rho_gof: Option<GofResult>,
    pub refinement: Option<VelocityZeroRefinement>,
    pub reports: Vec<EstimatorReport>,
}

struct ReplicaRun {
    excursions: Vec<ExcursionSummary>,
    rho: Vec<f64>,
    censored: usize,
}

fn run_replica(p: &ExcursionParams, r: u64) -> Result<ReplicaRun> {
    let stream = RngStream::new(p.seed, r);
    match p.engine {
        Engine::Adaptive => {
            let cfg = AdaptiveConfig { floor_step: p.dt, kappa: p.kappa, noise: true };
            let sampler = ExcursionSampler::new(cfg, p.rho_eps.into_iter().collect())?;
            let run = sampler.sample_budget(&mut stream.rng(), p.steps);
            let eps = p.rho_eps.unwrap_or(1.0);
            let rho = run.excursions.iter().filter_map(|e| e.rho.first().copied().flatten()).map(|r| r.position / eps);
            Ok(ReplicaRun {
                rho: rho.collect(),
                excursions: run.excursions.into_iter().map(|e| e.summary).collect(),
                censored: run.censored,
            })
        }
        Engine::Grid => {
            let path = simulate_kolmogorov(p.steps as usize, p.dt, 0.0, 0.0, &stream, &SimOptions::default())?;
            let ex = extract_excursions(&reflected_process(&path)?, 0.0);
            let rho = match p.rho_eps {
                Some(eps) => ex.excursions.iter().filter_map(|e| rho_passage(e, eps)).map(|r| r.position / eps).collect(),
                None => Vec::new(),
            };
            Ok(ReplicaRun { excursions: ex.summaries(), rho, censored: ex.censored })
        }
    }
}

/// Beta(1/3, 5/6) density: the law of `ε / e(ρ_ε)`.
fn entrance_beta_density(t: f64) -> f64 {
    let b = beta(ALPHA, 5.0 / 6.0);
    t.powf(ALPHA - 1.0) * (1.0 - t).powf(-1.0 / 6.0) / b
}

pub fn run_excursions(p: &ExcursionParams, exec: Execution) -> Result<ExcursionOutcome> {
    p.validate()?;
    let runs = map_replicas(exec, p.replicas, |r| run_replica(p, r)).into_iter().collect::<Result<Vec<_>>>()?;
    let sm = seeds(p.seed, json!({ "replicas": format!("[{}, 0..{}]", p.seed, p.replicas), "engine": p.engine }));

    let mut per_replica = Vec::with_capacity(runs.len());
    let mut excursions = Vec::new();
    let mut rho_ratios = Vec::new();
    let mut censored = 0;
    for (r, run) in runs.into_iter().enumerate() {
        let above_low = count_above(&run.excursions, RATIO_LOW);
        let above_high = count_above(&run.excursions, RATIO_HIGH);
        per_replica.push(ReplicaCounts {
            replica: r as u64,
            excursions: run.excursions.len(),
            censored: run.censored,
            above_low,
            above_high,
            ratio: above_high as f64 / above_low as f64,
        });
        censored += run.censored;
        excursions.extend(run.excursions);
        rho_ratios.extend(run.rho);
    }

    let kept = filter_by_height(&excursions, p.min_height);
    let energy: Vec<f64> = energy_process(&kept).jumps.into_iter().filter(|&j| j > 0.0).collect();
    let mut tails = Vec::new();
    let mut reports = Vec::new();
    if let Ok(mut sets) = excursion_tails(&kept) {
        sets.lifetimes.censored_count = censored;
        let energy_set = crate::estimators::TailSampleSet::new("energy_jumps", energy.clone());
        for set in [&sets.heights, &sets.lifetimes, &sets.terminal_speeds, &energy_set] {
            tails.push(tail_stats(set, p.hill_k));
        }
        if !p.refinement {
            for (test, values, (target, tol)) in [
                ("hill_heights", &sets.heights.values, HEIGHT_INDEX),
                ("hill_lifetimes", &sets.lifetimes.values, LIFETIME_INDEX),
                ("hill_terminal_speeds", &sets.terminal_speeds.values, SPEED_INDEX),
                ("hill_energy_jumps", &energy, ENERGY_INDEX),
            ] {
                reports.push(hill_report(test, values, p.hill_k, target, tol, sm.clone()));
            }
        }
    }

    if !p.refinement {
        let n = kept.len();
        reports.push(report(
            "tail_sample_size",
            json!({ "min_height": p.min_height, "required": MIN_TAIL_SAMPLE }),
            n as f64,
            None,
            None,
            n >= MIN_TAIL_SAMPLE,
            sm.clone(),
        ));

        let target = (RATIO_HIGH / RATIO_LOW).powf(-1.0 / 6.0);
        let worst = per_replica.iter().map(|c| (c.ratio / target - 1.0).abs()).fold(0.0, |a: f64, b| {
            if b.is_nan() {
                f64::INFINITY
            } else {
                a.max(b)
            }
        });
        let inputs = json!({
            "levels": [RATIO_LOW, RATIO_HIGH], "target": target, "relative_tolerance": RATIO_TOLERANCE,
            "ratios": per_replica.iter().map(|c| c.ratio).collect::<Vec<_>>(),
        });
        reports.push(report("height_count_ratio", inputs, worst, None, None, worst <= RATIO_TOLERANCE, sm.clone()));

        let log_heights: Vec<f64> = kept.iter().map(|e| e.height.ln()).collect();
        if let Some((r, se)) = lag_one_correlation(&log_heights) {
            let inputs = json!({ "n": log_heights.len(), "tolerance_se": CORRELATION_TOLERANCE_SE });
            let pass = r.abs() <= CORRELATION_TOLERANCE_SE * se;
            reports.push(report("log_height_lag_one_correlation", inputs, r, None, Some(se), pass, sm.clone()));
        }
    }

    let mut rho_gof = None;
    if let Some(eps) = p.rho_eps {
        let t: Vec<f64> = rho_ratios.iter().map(|u| 1.0 / u).collect();
        let inputs = json!({ "eps": eps, "samples": t.len(), "bins": p.gof_bins, "level": GOF_LEVEL });
        match histogram_gof(&t, entrance_beta_density, p.gof_bins, (0.0, 1.0)) {
            Ok(g) => {
                reports.push(report("entrance_density_gof", inputs, g.chi2, Some(g.p_value), None, g.p_value > GOF_LEVEL, sm.clone()));
                rho_gof = Some(g);
            }
            Err(e) => {
                let mut inputs = inputs;
                inputs["error"] = json!(e.to_string());
                reports.push(report("entrance_density_gof", inputs, f64::NAN, None, None, false, sm.clone()));
            }
        }
    }

    let refinement = if p.refinement { Some(velocity_zero_refinement(p, exec)?) } else { None };
    if let Some(r) = &refinement {
        let inputs = json!({
            "coarse_step": r.coarse_step, "fine_step": r.fine_step, "min_height": p.d_min_height,
            "coarse_count": r.coarse_count, "fine_count": r.fine_count, "min_ratio": D_SHRINK,
        });
        reports.push(report("first_velocity_zero_refinement", inputs, r.ratio, None, None, r.ratio >= D_SHRINK, sm));
    }

    Ok(ExcursionOutcome { excursions, per_replica, tails, rho_ratios, rho_gof, refinement, reports })
}

fn velocity_zero_refinement(p: &ExcursionParams, exec: Execution) -> Result<VelocityZeroRefinement> {
    let fine_step = p.dt / 4.0;
    let per_replica: Vec<Result<(Vec<f64>, Vec<f64>)>> = map_replicas(exec, p.replicas, |r| {
        let stream = RngStream::new(p.seed, r);
        let mut out = [Vec::new(), Vec::new()];
        for (j, (n, h)) in [(p.steps as usize, p.dt), (4 * p.steps as usize, fine_step)].into_iter().enumerate() {
            let path = simulate_kolmogorov(n, h, 0.0, 0.0, &stream, &SimOptions::default())?;
            let ex = extract_excursions(&reflected_process(&path)?, p.d_min_height);
            out[j] = ex.excursions.iter().map(|e| e.d_first_zero).collect();
        }
        let [a, b] = out;
        Ok((a, b))
    });
    let (mut coarse, mut fine) = (Vec::new(), Vec::new());
    for r in per_replica {
        let (a, b) = r?;
        coarse.extend(a);
        fine.extend(b);
    }
    let coarse_median = median(&coarse).unwrap_or(f64::NAN);
    let fine_median = median(&fine).unwrap_or(f64::NAN);
    Ok(VelocityZeroRefinement {
        coarse_step: p.dt,
        fine_step,
        coarse_count: coarse.len(),
        fine_count: fine.len(),
        coarse_median,
        fine_median,
        ratio: coarse_median / fine_median,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate_singular;

    #[test]
    fn entrance_density_is_normalised() {
        let total = integrate_singular(entrance_beta_density, 0.0, 1.0, 1e-10).unwrap();
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn small_run_reports_every_check() {
        let p = ExcursionParams { steps: 200_000, replicas: 2, rho_eps: Some(0.2), ..ExcursionParams::default() };
        let out = run_excursions(&p, Execution::Sequential).unwrap();
        let names: Vec<&str> = out.reports.iter().map(|r| r.test.as_str()).collect();
        for t in ["hill_heights", "hill_lifetimes", "height_count_ratio", "entrance_density_gof", "tail_sample_size"] {
            assert!(names.contains(&t), "{names:?}");
        }
        assert_eq!(out.per_replica.len(), 2);
        assert_eq!(out.tails.len(), 4);
        assert!(out.rho_ratios.iter().all(|&u| u >= 1.0));
    }

    #[test]
    fn refinement_needs_grid() {
        let p = ExcursionParams { refinement: true, ..ExcursionParams::default() };
        assert!(run_excursions(&p, Execution::Sequential).unwrap_err().to_string().contains("refinement"));
    }
}
