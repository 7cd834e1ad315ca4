//! The fifteen acceptance checks, each a fixed parameter set for one of the
//! experiments plus the subset of its reports that decides the check.

use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use super::*;
use crate::estimators::EstimatorReport;
use crate::exec::Execution;
use crate::paths::GenerationMode;

pub const MOMENT_SAMPLES: usize = 100_000;
pub const MOMENT_TIME_LIMIT_S: f64 = 10.0;
pub const MIN_ENTRANCE_SAMPLES: usize = 5_000;
pub const RATIO_REPLICAS: u64 = 10;
pub const EXIT_STARTS: [f64; 3] = [0.5, 0.25, 0.75];

pub const TITLES: [&str; 15] = [
    "exact-increment moments",
    "discrete reflection identities",
    "excursion height tail",
    "excursion lifetime tail",
    "terminal speed tail",
    "energy jump tail",
    "exit law of the stable process",
    "entrance density at a passage level",
    "time-scaling identity",
    "stopped-process scaling and lifetime tail",
    "time-changed velocity identity under refinement",
    "first velocity zero under refinement",
    "zero-set dimension",
    "entrance exponent",
    "height count ratio",
];

#[derive(Clone, Debug, Serialize)]
pub struct CriterionOutcome {
    pub id: usize,
    pub title: &'static str,
    pub passed: bool,
    pub summary: String,
    pub reports: Vec<EstimatorReport>,
}

pub fn moments_params() -> SimulateParams {
    SimulateParams { steps: MOMENT_SAMPLES, dt: 0.01, mode: GenerationMode::ExactJoint, ..SimulateParams::default() }
}

pub fn identities_params() -> SimulateParams {
    SimulateParams::default()
}

/// One budget run of the adaptive engine, all excursions kept, `k = 1000`
/// order statistics in the Hill estimates.
pub fn tails_params() -> ExcursionParams {
    ExcursionParams { hill_k: Some(1000), ..ExcursionParams::default() }
}

pub fn entrance_density_params() -> ExcursionParams {
    ExcursionParams { rho_eps: Some(0.2), ..tails_params() }
}

pub fn ratio_params() -> ExcursionParams {
    ExcursionParams { replicas: RATIO_REPLICAS, ..ExcursionParams::default() }
}

pub fn velocity_zero_params() -> ExcursionParams {
    ExcursionParams {
        engine: Engine::Grid,
        steps: 1_000_000,
        replicas: 10,
        refinement: true,
        ..ExcursionParams::default()
    }
}

pub fn exit_law_params(x: f64) -> ExitLawParams {
    ExitLawParams { x, ..ExitLawParams::default() }
}

pub fn scaling_params() -> ScalingParams {
    ScalingParams::default()
}

/// Median over 100 paths of the per-path maximal discrepancy, two
/// halvings.
pub fn local_time_params() -> SimulateParams {
    SimulateParams { refinements: 2, replicas: 100, ..SimulateParams::default() }
}

pub fn dimension_params() -> DimensionParams {
    DimensionParams::default()
}

pub fn entrance_params() -> EntranceParams {
    EntranceParams::default()
}

fn pick(reports: Vec<EstimatorReport>, names: &[&str]) -> Vec<EstimatorReport> {
    reports.into_iter().filter(|r| names.contains(&r.test.as_str())).collect()
}

fn number(v: f64) -> String {
    if v != 0.0 && v.abs() < 1e-3 {
        format!("{v:.3e}")
    } else {
        format!("{v:.4}")
    }
}

fn summarise(reports: &[EstimatorReport]) -> String {
    reports
        .iter()
        .map(|r| {
            let verdict = if r.decision.passed() { "ok" } else { "FAILED" };
            match r.p_value {
                Some(p) => format!("{}={} (p={p:.3}, {verdict})", r.test, number(r.statistic)),
                None => format!("{}={} ({verdict})", r.test, number(r.statistic)),
            }
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn expect(reports: &[EstimatorReport], names: &[&str]) -> crate::Result<()> {
    for n in names {
        if !reports.iter().any(|r| r.test == *n) {
            return Err(crate::Error::InvalidArgument(format!("experiment produced no {n} report")));
        }
    }
    Ok(())
}

/// Runs acceptance check `id` (1 to 15).
pub fn evaluate(id: usize, exec: Execution) -> crate::Result<CriterionOutcome> {
    let title = *TITLES
        .get(id.wrapping_sub(1))
        .ok_or_else(|| crate::Error::InvalidArgument(format!("no acceptance check {id}")))?;
    let (names, reports): (Vec<&str>, Vec<EstimatorReport>) = match id {
        1 => {
            let t0 = Instant::now();
            let out = run_simulate(&moments_params(), exec)?;
            let secs = t0.elapsed().as_secs_f64();
            let mut reports = out.reports;
            reports.push(report(
                "wall_time_seconds",
                json!({ "limit": MOMENT_TIME_LIMIT_S }),
                secs,
                None,
                None,
                secs < MOMENT_TIME_LIMIT_S,
                json!(null),
            ));
            let names = vec![
                "increment_variance_w",
                "increment_variance_fluctuation",
                "increment_covariance",
                "wall_time_seconds",
            ];
            (names, reports)
        }
        2 => (vec!["discrete_identities"], run_simulate(&identities_params(), exec)?.reports),
        3 => (vec!["hill_heights", "tail_sample_size"], run_excursions(&tails_params(), exec)?.reports),
        4 => (vec!["hill_lifetimes"], run_excursions(&tails_params(), exec)?.reports),
        5 => (vec!["hill_terminal_speeds"], run_excursions(&tails_params(), exec)?.reports),
        6 => (vec!["hill_energy_jumps"], run_excursions(&tails_params(), exec)?.reports),
        7 => {
            let mut reports = Vec::new();
            for x in EXIT_STARTS {
                for mut r in run_exit_law(&exit_law_params(x), exec)?.reports {
                    r.test = format!("{}_x{x}", r.test);
                    reports.push(r);
                }
            }
            let passed = reports.len() == 2 * EXIT_STARTS.len() && super::all_passed(&reports);
            return Ok(CriterionOutcome { id, title, passed, summary: summarise(&reports), reports });
        }
        8 => {
            let out = run_excursions(&entrance_density_params(), exec)?;
            let n = out.rho_ratios.len();
            let mut reports = out.reports;
            reports.push(report(
                "entrance_sample_size",
                json!({ "required": MIN_ENTRANCE_SAMPLES }),
                n as f64,
                None,
                None,
                n >= MIN_ENTRANCE_SAMPLES,
                json!(null),
            ));
            (vec!["entrance_density_gof", "entrance_sample_size"], reports)
        }
        9 => {
            let p = ScalingParams { stopped_replicas: 1, stopped_ks_samples: 1, ..scaling_params() };
            (vec!["time_scaling_ks"], run_scaling(&p, exec)?.reports)
        }
        10 => {
            let p = ScalingParams { replicas: 1, steps: 1, ..scaling_params() };
            (vec!["stopped_lifetime_scaling_ks", "stopped_lifetime_hill"], run_scaling(&p, exec)?.reports)
        }
        11 => (vec!["local_time_identity_refinement"], run_simulate(&local_time_params(), exec)?.reports),
        12 => (vec!["first_velocity_zero_refinement"], run_excursions(&velocity_zero_params(), exec)?.reports),
        13 => (vec!["brownian_zero_set_dimension", "zero_set_dimension"], run_dimension(&dimension_params(), exec)?.reports),
        14 => (vec!["entrance_slope", "entrance_vs_exact"], run_entrance(&entrance_params(), exec)?.reports),
        15 => (vec!["height_count_ratio"], run_excursions(&ratio_params(), exec)?.reports),
        _ => unreachable!(),
    };
    expect(&reports, &names)?;
    let reports = pick(reports, &names);
    let passed = super::all_passed(&reports);
    Ok(CriterionOutcome { id, title, passed, summary: summarise(&reports), reports })
}
