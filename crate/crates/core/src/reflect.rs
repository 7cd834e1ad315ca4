//! Pathwise reflection of a free Langevin path at an absorbing boundary.
//!
//! The free path `Y` is shifted by its running infimum `I`, giving
//! `X̃ = Y − I ≥ 0` with velocity `Ṽ = 1{X̃ > 0} W`. Stretches where `X̃`
//! sits at 0 (the free path tracking a new minimum during a negative
//! velocity excursion) are then cut out of the clock. What is left is the
//! reflected pair `(X, V)`: it leaves 0 immediately, spends no time there,
//! and has zero velocity whenever it touches the boundary.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::paths::PathGrid;

/// Running minimum. Record values are copied, never recomputed, so
/// `y[k] == i[k]` tests are exact.
pub fn infimum_process(y: &[f64]) -> Result<Vec<f64>> {
    let (&first, rest) = y.split_first().ok_or_else(|| invalid("empty path"))?;
    let mut out = Vec::with_capacity(y.len());
    let mut cur = first;
    out.push(cur);
    for &v in rest {
        if v < cur {
            cur = v;
        }
        out.push(cur);
    }
    Ok(out)
}

/// `(X̃, Ṽ)` from a path and its infimum process.
pub fn tilde_process(path: &PathGrid, inf: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if inf.len() != path.y.len() || path.w.len() != path.y.len() {
        return Err(invalid(format!(
            "length mismatch: y={}, w={}, infimum={}",
            path.y.len(),
            path.w.len(),
            inf.len()
        )));
    }
    let x: Vec<f64> = path.y.iter().zip(inf).map(|(&y, &i)| y - i).collect();
    let v = x
        .iter()
        .zip(&path.w)
        .map(|(&x, &w)| if x > 0.0 { w } else { 0.0 })
        .collect();
    Ok((x, v))
}

/// A maximal run of at least two grid points with `X̃ = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlatInterval {
    pub s_index: usize,
    pub d_index: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FlatScan {
    pub flats: Vec<FlatInterval>,
    /// Flats whose left endpoint carries `w >= 0`; these only occur at grid
    /// scale.
    pub left_endpoint_violations: usize,
}

pub fn flat_intervals(x_tilde: &[f64], w: &[f64]) -> FlatScan {
    let mut scan = FlatScan::default();
    let n = x_tilde.len();
    let mut k = 0;
    while k < n {
        if x_tilde[k] != 0.0 {
            k += 1;
            continue;
        }
        let s = k;
        while k + 1 < n && x_tilde[k + 1] == 0.0 {
            k += 1;
        }
        if k > s {
            if w.get(s).is_some_and(|&ws| ws >= 0.0) {
                scan.left_endpoint_violations += 1;
            }
            scan.flats.push(FlatInterval { s_index: s, d_index: k });
        }
        k += 1;
    }
    scan
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution {
    pub kept: Vec<usize>,
    /// Set when `X̃` never leaves 0.
    pub degenerate: bool,
}

/// Indices that survive the time change: every `k` with `X̃[k] > 0`, plus
/// the zero that terminates each positive run.
pub fn time_substitution(x_tilde: &[f64]) -> Substitution {
    let mut kept = Vec::new();
    let mut in_run = false;
    for (k, &x) in x_tilde.iter().enumerate() {
        if x > 0.0 {
            kept.push(k);
            in_run = true;
        } else if in_run {
            kept.push(k);
            in_run = false;
        }
    }
    let degenerate = kept.is_empty();
    Substitution { kept, degenerate }
}

/// The reflected pair sampled on the reflected clock; sample `k` sits at
/// reflected time `k * step`. Sample 0 is the starting point `(0, 0)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReflectedPath {
    pub step: f64,
    /// Source-grid index of each sample.
    pub kept: Vec<usize>,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    /// The free path never rose above its running minimum.
    pub degenerate: bool,
}

impl ReflectedPath {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.step
    }

    pub fn duration(&self) -> f64 {
        self.time(self.len().saturating_sub(1))
    }

    /// Reflected times of the boundary visits.
    pub fn zero_times(&self) -> Vec<f64> {
        self.x
            .iter()
            .enumerate()
            .filter(|(_, &x)| x == 0.0)
            .map(|(k, _)| self.time(k))
            .collect()
    }

    /// CSV with header `t_reflected,x,v,source_index`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["t_reflected", "x", "v", "source_index"])?;
        for k in 0..self.len() {
            wtr.write_record(&[
                self.time(k).to_string(),
                self.x[k].to_string(),
                self.v[k].to_string(),
                self.kept[k].to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Reflect a free path started from `(0, 0)`.
pub fn reflected_process(path: &PathGrid) -> Result<ReflectedPath> {
    if path.x0 != 0.0 || path.v0 != 0.0 {
        return Err(invalid("reflection expects a path started from x0 = v0 = 0"));
    }
    let inf = infimum_process(&path.y)?;
    let (x_tilde, v_tilde) = tilde_process(path, &inf)?;
    let sub = time_substitution(&x_tilde);
    let mut kept = Vec::with_capacity(sub.kept.len() + 1);
    kept.push(0);
    kept.extend(sub.kept.iter().copied().filter(|&k| k > 0));
    let x = kept.iter().map(|&k| x_tilde[k]).collect();
    let v = kept.iter().map(|&k| v_tilde[k]).collect();
    Ok(ReflectedPath { step: path.step, kept, x, v, degenerate: sub.degenerate })
}

/// Exact discrete counterparts of the defining identities.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub samples: usize,
    pub zero_samples: usize,
    /// Samples with `x < 0`.
    pub negative_positions: usize,
    /// Zero samples with nonzero velocity.
    pub absorption_violations: usize,
    /// Positive samples whose velocity differs from the source velocity.
    pub velocity_mismatches: usize,
    /// Largest `|w|` at the source index of a zero sample: the grid-scale
    /// residual of the driving velocity at boundary visits.
    pub max_zero_sample_w: f64,
    /// Kept indices strictly inside a flat.
    pub kept_inside_flat: usize,
}

impl IdentityReport {
    pub fn exact(&self) -> bool {
        self.negative_positions == 0
            && self.absorption_violations == 0
            && self.velocity_mismatches == 0
            && self.kept_inside_flat == 0
    }
}

pub fn check_identities(rp: &ReflectedPath, path: &PathGrid) -> Result<IdentityReport> {
    let inf = infimum_process(&path.y)?;
    let (x_tilde, _) = tilde_process(path, &inf)?;
    let flats = flat_intervals(&x_tilde, &path.w).flats;
    let mut inside = vec![false; path.len()];
    for f in &flats {
        for flag in &mut inside[f.s_index + 1..=f.d_index] {
            *flag = true;
        }
    }
    let mut rep = IdentityReport { samples: rp.len(), ..Default::default() };
    for (k, (&x, &v)) in rp.x.iter().zip(&rp.v).enumerate() {
        let src = rp.kept[k];
        if x < 0.0 {
            rep.negative_positions += 1;
        }
        if x == 0.0 {
            rep.zero_samples += 1;
            if v != 0.0 {
                rep.absorption_violations += 1;
            }
            rep.max_zero_sample_w = rep.max_zero_sample_w.max(path.w[src].abs());
        } else if v.to_bits() != path.w[src].to_bits() {
            rep.velocity_mismatches += 1;
        }
        if k > 0 && inside[src] {
            rep.kept_inside_flat += 1;
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{simulate_kolmogorov, SimOptions};
    use crate::rng::RngStream;

    #[test]
    fn infimum_examples() {
        assert_eq!(infimum_process(&[0.0, 1.0, 2.0]).unwrap(), vec![0.0, 0.0, 0.0]);
        assert_eq!(infimum_process(&[0.0, -1.0, -0.5]).unwrap(), vec![0.0, -1.0, -1.0]);
        assert_eq!(
            infimum_process(&[0.0, 2.0, -1.0, 3.0, -2.0]).unwrap(),
            vec![0.0, 0.0, -1.0, -1.0, -2.0]
        );
        assert!(infimum_process(&[]).is_err());
    }

    fn grid(y: Vec<f64>, w: Vec<f64>) -> PathGrid {
        PathGrid { step: 1.0, x0: y[0], v0: w[0], w, y }
    }

    #[test]
    fn tilde_increasing_path() {
        let p = grid(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 2.0]);
        let i = infimum_process(&p.y).unwrap();
        let (x, v) = tilde_process(&p, &i).unwrap();
        assert_eq!(x, p.y);
        assert_eq!(v, vec![0.0, 2.0, 2.0]);
    }

    #[test]
    fn tilde_monotone_decreasing_is_flat() {
        let p = grid(vec![0.0, -1.0, -3.0], vec![0.0, -2.0, -2.0]);
        let i = infimum_process(&p.y).unwrap();
        let (x, v) = tilde_process(&p, &i).unwrap();
        assert!(x.iter().all(|&x| x == 0.0));
        assert!(v.iter().all(|&v| v == 0.0));
        assert!(tilde_process(&p, &i[..2]).is_err());
    }

    #[test]
    fn flats_examples() {
        assert!(flat_intervals(&[0.0, 1.0, 2.0, 0.5], &[0.0, 1.0, 1.0, -1.0]).flats.is_empty());
        let scan = flat_intervals(&[0.0, 0.0, 0.0, 1.0, 0.0, 0.0], &[-1.0, -1.0, -1.0, 2.0, -3.0, -1.0]);
        assert_eq!(
            scan.flats,
            vec![FlatInterval { s_index: 0, d_index: 2 }, FlatInterval { s_index: 4, d_index: 5 }]
        );
        assert_eq!(scan.left_endpoint_violations, 0);
    }

    #[test]
    fn substitution_examples() {
        assert_eq!(time_substitution(&[1.0, 2.0, 3.0]).kept, vec![0, 1, 2]);
        assert_eq!(time_substitution(&[0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0]).kept, vec![1, 2, 3, 5, 6]);
        let d = time_substitution(&[0.0, 0.0, 0.0]);
        assert!(d.kept.is_empty() && d.degenerate);
    }

    #[test]
    fn reflected_noiseless_is_single_point() {
        let p = simulate_kolmogorov(20, 0.1, 0.0, 0.0, &RngStream::new(0, 0), &SimOptions::noiseless()).unwrap();
        let rp = reflected_process(&p).unwrap();
        assert!(rp.degenerate);
        assert_eq!(rp.x, vec![0.0]);
        assert_eq!(rp.v, vec![0.0]);
    }

    #[test]
    fn reflected_positive_path_is_free_path() {
        let p = grid(vec![0.0, 0.5, 1.5, 2.0], vec![0.0, 1.0, 1.0, 0.5]);
        let rp = reflected_process(&p).unwrap();
        assert_eq!(rp.kept, vec![0, 1, 2, 3]);
        assert_eq!(rp.x, p.y);
        assert_eq!(&rp.v[1..], &p.w[1..]);
        assert!(reflected_process(&grid(vec![1.0, 2.0], vec![0.0, 0.0])).is_err());
    }

    #[test]
    fn identities_on_simulated_path() {
        let p = simulate_kolmogorov(200_000, 1e-3, 0.0, 0.0, &RngStream::new(11, 0), &SimOptions::default()).unwrap();
        let rp = reflected_process(&p).unwrap();
        let rep = check_identities(&rp, &p).unwrap();
        assert!(rep.exact(), "{rep:?}");
        assert!(rep.zero_samples >= 2);
    }

    #[test]
    fn csv_header() {
        let p = grid(vec![0.0, 0.5, 0.0], vec![0.0, 1.0, -1.0]);
        let rp = reflected_process(&p).unwrap();
        let mut buf = Vec::new();
        rp.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t_reflected,x,v,source_index\n0,0,0,0\n"));
    }
}
