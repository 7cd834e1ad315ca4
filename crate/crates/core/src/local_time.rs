//! Occupation-density local time of the driving velocity at 0, its
//! right-continuous inverse, and the stable process seen through it.
//!
//! Viewing the free position at the inverse local time of the velocity
//! gives a symmetric stable process of index 1/3. Reading the reflected
//! position at the inverse of the same local time (carried through the
//! reflection clock) gives that stable process reflected at its running
//! infimum. [`velocity_local_time_check`] measures how far a discretised
//! path is from that identity.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::paths::{exact_increment, PathGrid};
use crate::reflect::ReflectedPath;

/// Default occupation bandwidth multiplier: `eps = C * sqrt(step)`.
pub const DEFAULT_BANDWIDTH_FACTOR: f64 = 1.0;
pub const DEFAULT_LEVEL_STEP: f64 = 0.01;

pub fn default_bandwidth(step: f64) -> f64 {
    DEFAULT_BANDWIDTH_FACTOR * step.sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalTimeCurve {
    pub eps: f64,
    pub values: Vec<f64>,
}

impl LocalTimeCurve {
    pub fn total(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

/// `values[k] = (step / eps) * #{j <= k : 0 < w[j] < eps}`.
pub fn occupation_local_time(w: &[f64], step: f64, eps: f64) -> Result<LocalTimeCurve> {
    if !(eps > 0.0) {
        return Err(invalid(format!("bandwidth must be positive, got {eps}")));
    }
    if !(step > 0.0) {
        return Err(invalid(format!("step must be positive, got {step}")));
    }
    let unit = step / eps;
    let mut count = 0u64;
    let values = w
        .iter()
        .map(|&v| {
            if v > 0.0 && v < eps {
                count += 1;
            }
            count as f64 * unit
        })
        .collect();
    Ok(LocalTimeCurve { eps, values })
}

/// For each level, the first index whose curve value exceeds it (`None`
/// once the curve is exhausted).
pub fn right_inverse(curve: &[f64], levels: &[f64]) -> Vec<Option<usize>> {
    levels
        .iter()
        .map(|&l| {
            let k = curve.partition_point(|&v| v <= l);
            (k < curve.len()).then_some(k)
        })
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeChangedStablePath {
    /// Local-time levels; the first entry is the origin.
    pub local_times: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Source-grid index read at each level.
    pub indices: Vec<usize>,
}

impl TimeChangedStablePath {
    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    /// CSV with header `local_time,sigma`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["local_time", "sigma"])?;
        for (l, s) in self.local_times.iter().zip(&self.sigma) {
            wtr.write_record(&[l.to_string(), s.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// The free position read at the inverse local time on the level grid
/// `level_step, 2 level_step, ..`, preceded by the origin (the inverse
/// local time at level 0 is time 0). Empty when no local time accrues.
pub fn stable_from_langevin(path: &PathGrid, lt: &LocalTimeCurve, level_step: f64) -> Result<TimeChangedStablePath> {
    if !(level_step > 0.0) {
        return Err(invalid(format!("level step must be positive, got {level_step}")));
    }
    if lt.values.len() != path.len() {
        return Err(invalid("local time curve and path differ in length"));
    }
    let mut out = TimeChangedStablePath::default();
    if lt.total() <= 0.0 {
        return Ok(out);
    }
    out.local_times.push(0.0);
    out.sigma.push(path.y[0]);
    out.indices.push(0);
    let n_levels = (lt.total() / level_step).floor() as usize + 1;
    let levels: Vec<f64> = (1..=n_levels).map(|i| i as f64 * level_step).collect();
    for (level, idx) in levels.iter().zip(right_inverse(&lt.values, &levels)) {
        let Some(k) = idx else { break };
        out.local_times.push(*level);
        out.sigma.push(path.y[k]);
        out.indices.push(k);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalTimeCheck {
    /// Local time carried to the reflected clock: `lambda[k] = L[kept[k]]`.
    pub lambda: LocalTimeCurve,
    pub levels_compared: usize,
    /// `max |X(λ⁻¹(ℓ)) − (σ(ℓ) − ι(ℓ))|` over the level grid.
    pub max_discrepancy: f64,
}

/// Compare the reflected path read at the inverse of `lambda` with the
/// stable path reflected at its running infimum. The infimum `ι` runs over
/// every level at which the local time moves, not only the grid levels.
pub fn velocity_local_time_check(
    rp: &ReflectedPath,
    path: &PathGrid,
    lt: &LocalTimeCurve,
    level_step: f64,
) -> Result<LocalTimeCheck> {
    if !(level_step > 0.0) {
        return Err(invalid(format!("level step must be positive, got {level_step}")));
    }
    if lt.values.len() != path.len() {
        return Err(invalid("local time curve and path differ in length"));
    }
    if rp.kept.last().is_some_and(|&k| k >= path.len()) {
        return Err(invalid("reflected path does not come from this source path"));
    }
    let lambda = LocalTimeCurve { eps: lt.eps, values: rp.kept.iter().map(|&k| lt.values[k]).collect() };
    let total = lambda.total().min(lt.total());
    if total <= 0.0 {
        return Ok(LocalTimeCheck { lambda, levels_compared: 0, max_discrepancy: 0.0 });
    }

    // Running minimum of y over the indices where the local time increases.
    let mut iota = Vec::with_capacity(path.len());
    let mut cur = path.y[0];
    let mut prev = 0.0;
    for (&l, &y) in lt.values.iter().zip(&path.y) {
        if l > prev && y < cur {
            cur = y;
        }
        prev = l;
        iota.push(cur);
    }

    let n_levels = (total / level_step).floor() as usize + 1;
    let levels: Vec<f64> = (1..=n_levels).map(|i| i as f64 * level_step).collect();
    let left = right_inverse(&lambda.values, &levels);
    let right = right_inverse(&lt.values, &levels);
    let mut max_discrepancy = 0.0f64;
    let mut levels_compared = 0;
    for (l, r) in left.into_iter().zip(right) {
        let (Some(k), Some(m)) = (l, r) else { break };
        let reflected = rp.x[k];
        let stable = path.y[m] - iota[m];
        max_discrepancy = max_discrepancy.max((reflected - stable).abs());
        levels_compared += 1;
    }
    Ok(LocalTimeCheck { lambda, levels_compared, max_discrepancy })
}

/// Away from the occupation window the free path moves in exact steps of
/// `FREE_PATH_KAPPA * d²`, `d = |w| - eps`, never shorter than `step`.
pub const FREE_PATH_KAPPA: f64 = 0.05;

/// One draw of `σ` at local-time `level`: the free path from `(0, 0)` is
/// run until its occupation estimate (bandwidth `eps`, sample weight
/// `step`) first exceeds `level`, and its position there is returned.
/// `None` when the clock passes `time_cap` first.
pub fn sample_sigma<R: Rng + ?Sized>(level: f64, step: f64, eps: f64, rng: &mut R, time_cap: f64) -> Result<Option<f64>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(invalid(format!("step must be positive, got {step}")));
    }
    if !(eps > 0.0) {
        return Err(invalid(format!("bandwidth must be positive, got {eps}")));
    }
    if !(level >= 0.0) {
        return Err(invalid(format!("level must be nonnegative, got {level}")));
    }
    let weight = step / eps;
    let (mut w, mut y, mut t, mut l) = (0.0f64, 0.0, 0.0, 0.0);
    while t < time_cap {
        let d = (w.abs() - eps).max(0.0);
        let dt = (FREE_PATH_KAPPA * d * d).max(step);
        let (dw, fl) = exact_increment(rng, dt);
        y += w * dt + fl;
        w += dw;
        t += dt;
        if w > 0.0 && w < eps {
            l += weight;
            if l > level {
                return Ok(Some(y));
            }
        }
    }
    Ok(None)
}
