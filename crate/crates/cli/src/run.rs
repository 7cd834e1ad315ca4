//! Runs a manifest and writes its artifacts.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use reflang::estimators::EstimatorReport;
use reflang::excursions::write_excursions_csv;
use reflang::experiments::criteria::{evaluate, CriterionOutcome, TITLES};
use reflang::experiments::{
    all_passed, run_dimension, run_entrance, run_excursions, run_exit_law, run_scaling, run_simulate,
};
use reflang::stable::write_exits_csv;
use reflang::Execution;
use serde_json::{json, Value};

use crate::manifest::{Experiment, Manifest};

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_with(path: Option<&std::path::PathBuf>, f: impl FnOnce(BufWriter<File>) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => f(create(p)?).with_context(|| format!("writing {}", p.display())),
        None => Ok(()),
    }
}

fn csv_rows<W: Write>(out: W, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(header)?;
    for r in rows {
        wtr.write_record(&r)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Executes the experiment, writes its CSV files and JSON report, and
/// returns whether every statistical check passed.
pub fn run_experiment(m: &Manifest) -> Result<bool> {
    let exec = m.execution;
    let o = &m.outputs;
    let t0 = Instant::now();
    let (reports, results): (Vec<EstimatorReport>, Value) = match &m.experiment {
        Experiment::Simulate(p) => {
            let out = run_simulate(p, exec)?;
            write_with(o.out.as_ref(), |w| Ok(out.path.write_csv(w)?))?;
            if let Some(path) = o.extra("reflected") {
                let rp = out.reflected.as_ref().context("reflected: only free paths from (0, 0) are reflected")?;
                write_with(Some(path), |w| Ok(rp.write_csv(w)?))?;
            }
            let results = json!({
                "points": out.path.len(),
                "lifetime": out.lifetime,
                "identities": out.identities,
                "moments": out.moments,
                "refinement": out.refinement,
            });
            (out.reports, results)
        }
        Experiment::Excursions(p) => {
            let out = run_excursions(p, exec)?;
            write_with(o.out.as_ref(), |w| Ok(write_excursions_csv(&out.excursions, w)?))?;
            write_with(o.extra("stats"), |w| {
                let rows = out.tails.iter().map(|t| {
                    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                    vec![
                        t.name.clone(),
                        t.n.to_string(),
                        t.k.to_string(),
                        opt(t.hill_index),
                        opt(t.hill_stderr),
                        opt(t.loglog_slope),
                        t.censored_count.to_string(),
                    ]
                });
                csv_rows(w, &["name", "n", "k", "hill_index", "hill_stderr", "loglog_slope", "censored_count"], rows)
            })?;
            let results = json!({
                "excursions": out.excursions.len(),
                "per_replica": out.per_replica,
                "tails": out.tails,
                "rho_samples": out.rho_ratios.len(),
                "rho_gof": out.rho_gof,
                "refinement": out.refinement,
            });
            (out.reports, results)
        }
        Experiment::ExitLaw(p) => {
            let out = run_exit_law(p, exec)?;
            write_with(o.out.as_ref(), |w| Ok(write_exits_csv(&out.outcomes, w)?))?;
            write_with(o.extra("gof"), |w| {
                let g = out.gof.as_ref();
                let f = |v: Option<String>| v.unwrap_or_default();
                let row = vec![
                    p.x.to_string(),
                    p.eps.to_string(),
                    out.p_above.to_string(),
                    out.p_exact.to_string(),
                    f(g.map(|g| g.chi2.to_string())),
                    f(g.map(|g| g.dof.to_string())),
                    f(g.map(|g| g.p_value.to_string())),
                    f(g.map(|g| g.n.to_string())),
                    f(g.map(|g| g.bins_used.to_string())),
                ];
                csv_rows(w, &["x", "eps", "p_above", "p_exact", "chi2", "dof", "p_value", "n", "bins_used"], [row])
            })?;
            let results = json!({
                "above": out.above, "below": out.below, "censored": out.censored,
                "p_above": out.p_above, "p_exact": out.p_exact, "gof": out.gof,
            });
            (out.reports, results)
        }
        Experiment::Scaling(p) => {
            let out = run_scaling(p, exec)?;
            write_with(o.out.as_ref(), |w| {
                let rows = out.x_t.iter().zip(&out.x_at_scaled).enumerate().map(|(i, (a, b))| {
                    vec![i.to_string(), a.to_string(), b.to_string()]
                });
                csv_rows(w, &["replica", "x_t", "x_at_scaled"], rows)
            })?;
            write_with(o.extra("lifetimes"), |w| {
                let rows = out.zeta_1.iter().map(|z| vec!["1".to_string(), z.to_string()]).chain(
                    out.zeta_scaled.iter().map(|z| vec![p.stopped_start.to_string(), z.to_string()]),
                );
                csv_rows(w, &["start", "scaled_lifetime"], rows)
            })?;
            let results = json!({
                "time": p.time(), "samples": out.x_t.len(),
                "lifetimes": [out.zeta_1.len(), out.zeta_scaled.len()], "censored": out.censored,
            });
            (out.reports, results)
        }
        Experiment::Dimension(p) => {
            let out = run_dimension(p, exec)?;
            write_with(o.out.as_ref(), |w| {
                let rows = [("reflected", &out.zero_set), ("brownian", &out.brownian)].into_iter().flat_map(|(name, e)| {
                    e.scales
                        .iter()
                        .zip(&e.log_mean_counts)
                        .map(move |(d, c)| vec![name.to_string(), d.to_string(), c.to_string()])
                });
                csv_rows(w, &["set", "scale", "log_mean_count"], rows)
            })?;
            let results = json!({ "zero_set": out.zero_set, "brownian": out.brownian });
            (out.reports, results)
        }
        Experiment::Entrance(p) => {
            let out = run_entrance(p, exec)?;
            write_with(o.out.as_ref(), |w| {
                let rows = out.points.iter().zip(&out.exact).map(|(q, e)| {
                    vec![
                        q.x.to_string(),
                        q.probability.to_string(),
                        q.stderr.to_string(),
                        e.to_string(),
                        q.reached.to_string(),
                        q.censored.to_string(),
                        q.replicas.to_string(),
                    ]
                });
                csv_rows(w, &["x", "probability", "stderr", "exact", "reached", "censored", "replicas"], rows)
            })?;
            let results = json!({ "points": out.points, "exact": out.exact, "slope": out.slope });
            (out.reports, results)
        }
    };
    let passed = all_passed(&reports);
    let report = json!({
        "command": m.experiment.command(),
        "library_version": reflang::VERSION,
        "manifest": m.echo(),
        "seed": m.experiment.seed(),
        "wall_time_seconds": t0.elapsed().as_secs_f64(),
        "passed": passed,
        "reports": reports,
        "results": results,
    });
    emit_report(o.report.as_deref(), &report)?;
    Ok(passed)
}

pub fn emit_report(path: Option<&Path>, report: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(report)?;
    match path {
        Some(p) => {
            let mut w = create(p)?;
            writeln!(w, "{text}").and_then(|_| w.flush()).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

/// Runs the selected acceptance checks, printing one line per check.
pub fn run_acceptance(ids: &[usize], exec: Execution, report: Option<&Path>) -> Result<bool> {
    let t0 = Instant::now();
    let mut outcomes: Vec<CriterionOutcome> = Vec::new();
    for &id in ids {
        let o = evaluate(id, exec)?;
        let verdict = if o.passed { "PASS" } else { "FAIL" };
        eprintln!("{verdict} {id:>2} {}: {}", o.title, o.summary);
        outcomes.push(o);
    }
    let passed = outcomes.iter().all(|o| o.passed);
    if let Some(p) = report {
        let value = json!({
            "command": "acceptance",
            "library_version": reflang::VERSION,
            "checks": ids,
            "execution": exec,
            "wall_time_seconds": t0.elapsed().as_secs_f64(),
            "passed": passed,
            "outcomes": outcomes,
        });
        emit_report(Some(p), &value)?;
    }
    Ok(passed)
}

pub fn check_ids(ids: &[usize]) -> Result<()> {
    for &id in ids {
        anyhow::ensure!((1..=TITLES.len()).contains(&id), "no acceptance check {id}; checks run from 1 to {}", TITLES.len());
    }
    Ok(())
}
