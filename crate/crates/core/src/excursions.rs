//! Excursions of the reflected path away from 0 and the statistics built
//! from them: heights, lifetimes, terminal speeds, the first velocity zero,
//! the passage marker `ρ_ε`, the absorbed energy, and the entrance probe.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::adaptive::{run_stopped, AdaptiveConfig, StopOutcome};
use crate::error::{invalid, Result};
use crate::estimators::{default_k, hill_tail_index, loglog_survival_fit, quantile};
use crate::exec::{map_replicas, Execution};
use crate::reflect::ReflectedPath;
use crate::rng::RngStream;

pub use crate::adaptive::{ExcursionSummary, RhoPassage};
pub use crate::estimators::TailSampleSet;

pub const DEFAULT_MIN_HEIGHT_QUANTILE: f64 = 0.9;

/// One excursion read off a uniform reflected path. Samples are
/// `step`-spaced and include the zero at either end.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Excursion {
    pub start_time: f64,
    pub step: f64,
    pub x_samples: Vec<f64>,
    pub v_samples: Vec<f64>,
    pub zeta: f64,
    pub height: f64,
    /// Velocity at the last interior sample.
    pub v_end: f64,
    pub d_first_zero: f64,
}

impl Excursion {
    /// Build from full samples (zero at both ends, at least one interior).
    pub fn from_samples(start_time: f64, step: f64, x_samples: Vec<f64>, v_samples: Vec<f64>) -> Result<Self> {
        let n = x_samples.len();
        if n < 3 || v_samples.len() != n {
            return Err(invalid("an excursion needs matching samples with at least one interior point"));
        }
        let height = x_samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let v_end = v_samples[n - 2];
        let mut exc = Excursion {
            start_time,
            step,
            zeta: (n - 1) as f64 * step,
            height,
            v_end,
            d_first_zero: 0.0,
            x_samples,
            v_samples,
        };
        exc.d_first_zero = first_zero_of_velocity(&exc);
        Ok(exc)
    }

    pub fn summary(&self) -> ExcursionSummary {
        ExcursionSummary {
            start_time: self.start_time,
            zeta: self.zeta,
            height: self.height,
            v_end: self.v_end,
            d_first_zero: self.d_first_zero,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtractedExcursions {
    pub excursions: Vec<Excursion>,
    /// Incomplete excursion cut by the horizon (0 or 1).
    pub censored: usize,
    /// Complete excursions dropped by the height filter.
    pub below_min_height: usize,
}

impl ExtractedExcursions {
    pub fn summaries(&self) -> Vec<ExcursionSummary> {
        self.excursions.iter().map(Excursion::summary).collect()
    }
}

/// Split the reflected path at its zeros. Excursions lower than
/// `min_height` are dropped when `min_height > 0`.
pub fn extract_excursions(rp: &ReflectedPath, min_height: f64) -> ExtractedExcursions {
    let mut out = ExtractedExcursions::default();
    let zeros: Vec<usize> = (0..rp.len()).filter(|&k| rp.x[k] == 0.0).collect();
    let trailing_start = zeros.last().map_or(0, |&z| z + 1);
    if trailing_start < rp.len() || (zeros.first().is_some_and(|&z| z > 0)) {
        out.censored = 1;
    }
    for pair in zeros.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b < a + 2 {
            continue;
        }
        let exc = Excursion::from_samples(rp.time(a), rp.step, rp.x[a..=b].to_vec(), rp.v[a..=b].to_vec())
            .expect("run has an interior point");
        if min_height > 0.0 && exc.height < min_height {
            out.below_min_height += 1;
        } else {
            out.excursions.push(exc);
        }
    }
    out
}

/// Time of the sample preceding the first sample (after the start) whose
/// velocity is not positive.
pub fn first_zero_of_velocity(exc: &Excursion) -> f64 {
    let j = exc.v_samples.iter().skip(1).position(|&v| v <= 0.0).map_or(exc.v_samples.len() - 1, |p| p + 1);
    (j - 1) as f64 * exc.step
}

/// First interior sample at which the velocity is not positive, at or after
/// the first interior sample with `x >= eps`.
pub fn rho_passage(exc: &Excursion, eps: f64) -> Option<RhoPassage> {
    let n = exc.x_samples.len();
    let first = (1..n - 1).find(|&j| exc.x_samples[j] >= eps)?;
    let j = (first..n - 1).find(|&j| exc.v_samples[j] <= 0.0)?;
    Some(RhoPassage { time: j as f64 * exc.step, position: exc.x_samples[j] })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailSets {
    pub heights: TailSampleSet,
    pub lifetimes: TailSampleSet,
    pub terminal_speeds: TailSampleSet,
}

/// Heights, lifetimes and terminal speeds `|v_end|`. A zero terminal speed
/// cannot enter a power-law fit and is left out.
pub fn excursion_tails(excs: &[ExcursionSummary]) -> Result<TailSets> {
    if excs.is_empty() {
        return Err(invalid("no excursions"));
    }
    Ok(TailSets {
        heights: TailSampleSet::new("heights", excs.iter().map(|e| e.height).collect()),
        lifetimes: TailSampleSet::new("lifetimes", excs.iter().map(|e| e.zeta).collect()),
        terminal_speeds: TailSampleSet::new(
            "terminal_speeds",
            excs.iter().map(|e| e.v_end.abs()).filter(|v| *v > 0.0).collect(),
        ),
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub times: Vec<f64>,
    pub jumps: Vec<f64>,
}

impl EnergyLedger {
    pub fn cumulative(&self) -> Vec<f64> {
        self.jumps
            .iter()
            .scan(0.0, |acc, j| {
                *acc += j;
                Some(*acc)
            })
            .collect()
    }
}

/// One jump `v_end² / 2` at each excursion end.
pub fn energy_process(excs: &[ExcursionSummary]) -> EnergyLedger {
    EnergyLedger {
        times: excs.iter().map(ExcursionSummary::end_time).collect(),
        jumps: excs.iter().map(|e| 0.5 * e.v_end * e.v_end).collect(),
    }
}

/// Height at empirical quantile `q`.
pub fn height_quantile(excs: &[ExcursionSummary], q: f64) -> f64 {
    if excs.is_empty() {
        return 0.0;
    }
    let mut h: Vec<f64> = excs.iter().map(|e| e.height).collect();
    h.sort_by(f64::total_cmp);
    quantile(&h, q)
}

pub fn filter_by_height(excs: &[ExcursionSummary], min_height: f64) -> Vec<ExcursionSummary> {
    excs.iter().filter(|e| e.height >= min_height).cloned().collect()
}

pub fn count_above(excs: &[ExcursionSummary], x: f64) -> usize {
    excs.iter().filter(|e| e.height > x).count()
}

/// Tail summary in the excursion stats schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailStats {
    pub name: String,
    pub n: usize,
    pub hill_index: Option<f64>,
    pub hill_stderr: Option<f64>,
    pub loglog_slope: Option<f64>,
    pub k: usize,
    pub censored_count: usize,
}

pub const LOGLOG_WINDOW: (f64, f64) = (0.9, 1.0);

/// Hill index (with `k = ⌊√n⌋` unless given) and the log-log survival
/// slope over the top decile; fields stay empty when the sample is too
/// small.
pub fn tail_stats(set: &TailSampleSet, k: Option<usize>) -> TailStats {
    let k = k.unwrap_or_else(|| default_k(set.len()));
    let hill = hill_tail_index(&set.values, k).ok();
    let fit = loglog_survival_fit(&set.values, LOGLOG_WINDOW).ok();
    TailStats {
        name: set.name.clone(),
        n: set.len(),
        hill_index: hill.map(|h| h.index_hat),
        hill_stderr: hill.map(|h| h.stderr),
        loglog_slope: fit.map(|f| f.slope),
        k,
        censored_count: set.censored_count,
    }
}

/// CSV with header `start_time,zeta,height,v_end,d_first_zero`.
pub fn write_excursions_csv<W: Write>(excs: &[ExcursionSummary], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["start_time", "zeta", "height", "v_end", "d_first_zero"])?;
    for e in excs {
        wtr.write_record(&[
            e.start_time.to_string(),
            e.zeta.to_string(),
            e.height.to_string(),
            e.v_end.to_string(),
            e.d_first_zero.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntrancePoint {
    pub x: f64,
    pub probability: f64,
    pub stderr: f64,
    pub reached: u64,
    pub censored: u64,
    pub replicas: u64,
    /// Start at or above the threshold: probability 1 without simulation.
    pub by_convention: bool,
}

pub const ENTRANCE_TIME_CAP: f64 = 1e6;

/// Monte Carlo probability that the Langevin process started at `(x, 0)`
/// reaches `threshold` before 0, for each `x`. Censored runs count as not
/// reaching.
pub fn entrance_scaling_probe(
    xs: &[f64],
    threshold: f64,
    replicas: u64,
    cfg: &AdaptiveConfig,
    stream: &RngStream,
    exec: Execution,
) -> Result<Vec<EntrancePoint>> {
    cfg.validate()?;
    if !(threshold > 0.0) {
        return Err(invalid(format!("threshold must be positive, got {threshold}")));
    }
    if replicas == 0 {
        return Err(invalid("need at least one replica"));
    }
    let mut out = Vec::with_capacity(xs.len());
    for (i, &x) in xs.iter().enumerate() {
        if !(x > 0.0) {
            return Err(invalid(format!("start positions must be positive, got {x}")));
        }
        if x >= threshold {
            out.push(EntrancePoint {
                x,
                probability: 1.0,
                stderr: 0.0,
                reached: replicas,
                censored: 0,
                replicas,
                by_convention: true,
            });
            continue;
        }
        let arm = stream.derive(i as u64);
        let outcomes = map_replicas(exec, replicas, |r| {
            let mut rng = arm.with_replica(r).rng();
            run_stopped(x, 0.0, threshold, cfg, &mut rng, ENTRANCE_TIME_CAP).expect("validated arguments")
        });
        let reached = outcomes.iter().filter(|o| matches!(o, StopOutcome::Reached { .. })).count() as u64;
        let censored = outcomes.iter().filter(|o| matches!(o, StopOutcome::Censored { .. })).count() as u64;
        let p = reached as f64 / replicas as f64;
        out.push(EntrancePoint {
            x,
            probability: p,
            stderr: (p * (1.0 - p) / replicas as f64).sqrt(),
            reached,
            censored,
            replicas,
            by_convention: false,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rp(x: Vec<f64>, v: Vec<f64>) -> ReflectedPath {
        let n = x.len();
        ReflectedPath { step: 0.5, kept: (0..n).collect(), x, v, degenerate: false }
    }

    #[test]
    fn single_excursion() {
        let r = rp(vec![0.0, 1.0, 2.0, 1.0, 0.0], vec![0.0, 2.0, 0.5, -1.5, 0.0]);
        let ex = extract_excursions(&r, 0.0);
        assert_eq!(ex.excursions.len(), 1);
        let e = &ex.excursions[0];
        assert_eq!(e.height, 2.0);
        assert_eq!(e.zeta, 2.0);
        assert_eq!(e.v_end, -1.5);
        assert_eq!(ex.censored, 0);
        assert_eq!(energy_process(&ex.summaries()).jumps, vec![1.125]);
    }

    #[test]
    fn flat_path_has_no_excursions() {
        let ex = extract_excursions(&rp(vec![0.0; 4], vec![0.0; 4]), 0.0);
        assert!(ex.excursions.is_empty());
        assert!(excursion_tails(&ex.summaries()).is_err());
    }

    #[test]
    fn trailing_run_is_censored() {
        let ex = extract_excursions(&rp(vec![0.0, 1.0, 0.0, 1.0, 3.0], vec![0.0, -1.0, 0.0, 1.0, 1.0]), 0.0);
        assert_eq!(ex.excursions.len(), 1);
        assert_eq!(ex.censored, 1);
        let filtered = extract_excursions(&rp(vec![0.0, 1.0, 0.0, 1.0, 3.0], vec![0.0; 5]), 2.0);
        assert_eq!(filtered.below_min_height, 1);
    }

    #[test]
    fn first_velocity_zero() {
        let e = Excursion::from_samples(0.0, 0.1, vec![0.0, 1.0, 1.0, 0.0], vec![0.0, -1.0, -1.0, 0.0]).unwrap();
        assert_eq!(e.d_first_zero, 0.0);
        let e = Excursion::from_samples(0.0, 0.1, vec![0.0, 1.0, 2.0, 1.0, 0.0], vec![0.0, 1.0, 1.0, -1.0, 0.0])
            .unwrap();
        assert!((e.d_first_zero - 0.2).abs() < 1e-15);
    }

    #[test]
    fn rho_examples() {
        let e = Excursion::from_samples(0.0, 1.0, vec![0.0, 2.0, 3.0, 2.0, 0.0], vec![2.0, 2.0, -1.0, -2.0, -2.0])
            .unwrap();
        let r = rho_passage(&e, 1.0).unwrap();
        assert_eq!(r.time, 2.0);
        assert_eq!(r.position, 3.0);
        assert!(rho_passage(&e, 3.5).is_none());
    }

    #[test]
    fn energy_of_degenerate_ends() {
        let s = ExcursionSummary { start_time: 0.0, zeta: 1.0, height: 1.0, v_end: 0.0, d_first_zero: 0.0 };
        let led = energy_process(&[s.clone(), s]);
        assert_eq!(led.jumps, vec![0.0, 0.0]);
        assert_eq!(led.cumulative(), vec![0.0, 0.0]);
    }

    #[test]
    fn tails_of_single_excursion() {
        let s = ExcursionSummary { start_time: 0.0, zeta: 3.0, height: 2.0, v_end: -0.5, d_first_zero: 0.0 };
        let t = excursion_tails(&[s]).unwrap();
        assert_eq!(t.heights.values, vec![2.0]);
        assert_eq!(t.lifetimes.values, vec![3.0]);
        assert_eq!(t.terminal_speeds.values, vec![0.5]);
    }

    #[test]
    fn entrance_conventions() {
        let cfg = AdaptiveConfig { noise: false, ..AdaptiveConfig::with_floor(1e-2) };
        let pts = entrance_scaling_probe(&[0.5, 1.0], 1.0, 4, &cfg, &RngStream::new(0, 0), Execution::Sequential)
            .unwrap();
        assert_eq!(pts[0].probability, 0.0);
        assert!(pts[1].by_convention && pts[1].probability == 1.0);
    }

    #[test]
    fn csv_header() {
        let mut buf = Vec::new();
        write_excursions_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "start_time,zeta,height,v_end,d_first_zero\n");
    }
}
