//! Driving Wiener paths and the integrated (Kolmogorov) pair on a uniform
//! grid: free paths, the path stopped at 0, and the bouncing variant.
//!
//! Two generators are provided. [`GenerationMode::Bridge`] builds the
//! Wiener path by dyadic Brownian-bridge refinement inside fixed root
//! blocks whose length depends only on the mantissa of the step, so that
//! halving the step with the same stream reproduces the coarse path exactly
//! at the coarse grid points. Positions are then integrated with the
//! trapezoid rule. [`GenerationMode::ExactJoint`] draws each step's
//! `(ΔW, ΔY)` from their exact joint Gaussian law.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::RngStream;

/// Root blocks have length `mantissa(step) * 2^ROOT_EXP`.
const ROOT_EXP: i32 = 4;
const MAX_DEPTH: i32 = 44;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathGrid {
    pub step: f64,
    /// Velocity `v0 + W` at the grid times.
    pub w: Vec<f64>,
    /// Position `Y` at the grid times.
    pub y: Vec<f64>,
    pub x0: f64,
    pub v0: f64,
}

impl PathGrid {
    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.step
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.len().saturating_sub(1))
    }

    /// CSV with header `t,w,y`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["t", "w", "y"])?;
        for k in 0..self.len() {
            wtr.write_record(&[
                self.time(k).to_string(),
                self.w[k].to_string(),
                self.y[k].to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenerationMode {
    #[default]
    Bridge,
    ExactJoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub mode: GenerationMode,
    /// Test hook: with `noise = false` the velocity stays at `v0`.
    pub noise: bool,
    /// Longest simulated time span accepted.
    pub horizon_cap: f64,
    /// Largest number of grid points materialised in one path.
    pub max_points: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            mode: GenerationMode::Bridge,
            noise: true,
            horizon_cap: 1e9,
            max_points: 200_000_000,
        }
    }
}

impl SimOptions {
    pub fn exact_joint() -> Self {
        Self { mode: GenerationMode::ExactJoint, ..Self::default() }
    }

    pub fn noiseless() -> Self {
        Self { noise: false, ..Self::default() }
    }
}

/// One exact transition of the Kolmogorov pair over `dt`.
///
/// Returns `(ΔW, fluctuation)` where the position increment is
/// `w * dt + fluctuation`; `Var ΔW = dt`, `Var fluctuation = dt³/3`,
/// `Cov = dt²/2`.
#[inline]
pub fn exact_increment<R: Rng + ?Sized>(rng: &mut R, dt: f64) -> (f64, f64) {
    let z1: f64 = rng.sample(StandardNormal);
    let z2: f64 = rng.sample(StandardNormal);
    let s = dt.sqrt();
    let dw = s * z1;
    let fluct = dt * s * (0.5 * z1 + z2 * (0.5 / 3f64.sqrt()));
    (dw, fluct)
}

fn check_grid(n_steps: usize, step: f64, opts: &SimOptions) -> Result<()> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(invalid(format!("step must be positive and finite, got {step}")));
    }
    if n_steps as f64 * step > opts.horizon_cap {
        return Err(Error::ResourceLimit(format!(
            "horizon {} exceeds cap {}",
            n_steps as f64 * step,
            opts.horizon_cap
        )));
    }
    if n_steps >= opts.max_points {
        return Err(Error::ResourceLimit(format!(
            "{} grid points exceed cap {}",
            n_steps + 1,
            opts.max_points
        )));
    }
    Ok(())
}

/// Free Kolmogorov pair started from `(x0, v0)` with `n_steps` uniform steps.
pub fn simulate_kolmogorov(
    n_steps: usize,
    step: f64,
    x0: f64,
    v0: f64,
    rng: &RngStream,
    opts: &SimOptions,
) -> Result<PathGrid> {
    check_grid(n_steps, step, opts)?;
    if !x0.is_finite() || !v0.is_finite() {
        return Err(invalid("initial state must be finite"));
    }
    let (w, y) = if !opts.noise {
        let w = vec![v0; n_steps + 1];
        let y = trapezoid(x0, step, &w);
        (w, y)
    } else {
        match opts.mode {
            GenerationMode::Bridge => {
                let mut w = dyadic_wiener(n_steps, step, rng)?;
                if v0 != 0.0 {
                    w.iter_mut().for_each(|v| *v += v0);
                }
                let y = trapezoid(x0, step, &w);
                (w, y)
            }
            GenerationMode::ExactJoint => exact_joint_path(n_steps, step, x0, v0, rng),
        }
    };
    Ok(PathGrid { step, w, y, x0, v0 })
}

fn trapezoid(x0: f64, step: f64, w: &[f64]) -> Vec<f64> {
    let mut y = Vec::with_capacity(w.len());
    let mut acc = x0;
    y.push(acc);
    let half = 0.5 * step;
    for pair in w.windows(2) {
        acc += half * (pair[0] + pair[1]);
        y.push(acc);
    }
    y
}

fn exact_joint_path(n_steps: usize, step: f64, x0: f64, v0: f64, stream: &RngStream) -> (Vec<f64>, Vec<f64>) {
    let mut rng = stream.rng();
    let mut w = Vec::with_capacity(n_steps + 1);
    let mut y = Vec::with_capacity(n_steps + 1);
    let (mut wc, mut yc) = (v0, x0);
    w.push(wc);
    y.push(yc);
    for _ in 0..n_steps {
        let (dw, fl) = exact_increment(&mut rng, step);
        yc += wc * step + fl;
        wc += dw;
        w.push(wc);
        y.push(yc);
    }
    (w, y)
}

/// Root-block length and refinement depth for a step: `step = root / 2^depth`.
pub fn bridge_layout(step: f64) -> Result<(f64, u32)> {
    if !(step > 0.0) || !step.is_normal() {
        return Err(invalid(format!("step must be a positive normal float, got {step}")));
    }
    let bits = step.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32 - 1023;
    if exp >= ROOT_EXP {
        return Ok((step, 0));
    }
    let depth = ROOT_EXP - exp;
    if depth > MAX_DEPTH {
        return Err(Error::ResourceLimit(format!("step {step} needs bridge depth {depth}")));
    }
    let mantissa = f64::from_bits((bits & ((1u64 << 52) - 1)) | (1023u64 << 52));
    Ok((mantissa * 2f64.powi(ROOT_EXP), depth as u32))
}

/// Standard Wiener path (from 0) at `n_steps + 1` grid points built by
/// dyadic bridge refinement.
pub fn dyadic_wiener(n_steps: usize, step: f64, stream: &RngStream) -> Result<Vec<f64>> {
    let (root, depth) = bridge_layout(step)?;
    let block = 1usize << depth;
    let mut w = Vec::with_capacity(n_steps + 1);
    w.push(0.0);
    let mut start = 0.0;
    let mut b = 0u64;
    while w.len() < n_steps + 1 {
        let need = block.min(n_steps + 1 - w.len());
        let vals = bridge_block(start, root, depth, need, stream, b);
        w.extend_from_slice(&vals[1..=need]);
        start = block_end(start, root, stream, b);
        b += 1;
    }
    Ok(w)
}

fn block_end(start: f64, root: f64, stream: &RngStream, b: u64) -> f64 {
    let z: f64 = stream.keyed(b, 0).sample(StandardNormal);
    start + root.sqrt() * z
}

/// Values at local indices `0..=need` of block `b`.
fn bridge_block(start: f64, root: f64, depth: u32, need: usize, stream: &RngStream, b: u64) -> Vec<f64> {
    let mut vals = vec![start, block_end(start, root, stream, b)];
    for level in 1..=depth {
        let span = 1usize << (depth - level + 1);
        let n_int = need.div_ceil(span).min(vals.len() - 1);
        let sd = (root * 0.5f64.powi(level as i32 - 1)).sqrt() * 0.5;
        let mut rng = stream.keyed(b, level as u64);
        let mut next = Vec::with_capacity(2 * n_int + 1);
        for k in 0..n_int {
            let z: f64 = rng.sample(StandardNormal);
            next.push(vals[k]);
            next.push(0.5 * (vals[k] + vals[k + 1]) + sd * z);
        }
        next.push(vals[n_int]);
        vals = next;
    }
    vals.truncate(need + 1);
    vals
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Lifetime {
    Observed { time: f64 },
    Censored { horizon: f64 },
}

impl Lifetime {
    pub fn observed(&self) -> Option<f64> {
        match *self {
            Lifetime::Observed { time } => Some(time),
            Lifetime::Censored { .. } => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct StoppedRun {
    pub path: PathGrid,
    pub lifetime: Lifetime,
}

/// Langevin process from `(x, v0)` stopped at its first grid crossing of 0.
///
/// Steps are exact joint transitions. The hitting time inside the crossing
/// step is located by linear interpolation of `y`; the last grid point is
/// recorded with `y = 0`.
pub fn simulate_stopped_langevin(
    x: f64,
    v0: f64,
    step: f64,
    rng: &RngStream,
    opts: &SimOptions,
) -> Result<StoppedRun> {
    if !(x > 0.0) {
        return Err(invalid(format!("start position must be positive, got {x}")));
    }
    if !(step > 0.0) || !step.is_finite() {
        return Err(invalid(format!("step must be positive, got {step}")));
    }
    let max_steps = ((opts.horizon_cap / step).floor() as usize).min(opts.max_points);
    let mut gen = rng.rng();
    let mut w = vec![v0];
    let mut y = vec![x];
    let (mut wc, mut yc) = (v0, x);
    for k in 0..max_steps {
        let (dw, fl) = if opts.noise { exact_increment(&mut gen, step) } else { (0.0, 0.0) };
        let yn = yc + wc * step + fl;
        let wn = wc + dw;
        if yn <= 0.0 {
            let frac = yc / (yc - yn);
            let time = (k as f64 + frac) * step;
            w.push(wn);
            y.push(0.0);
            return Ok(StoppedRun {
                path: PathGrid { step, w, y, x0: x, v0 },
                lifetime: Lifetime::Observed { time },
            });
        }
        wc = wn;
        yc = yn;
        w.push(wc);
        y.push(yc);
    }
    Ok(StoppedRun {
        path: PathGrid { step, w, y, x0: x, v0 },
        lifetime: Lifetime::Censored { horizon: max_steps as f64 * step },
    })
}

/// Path of the particle that bounces elastically off 0: `|Y|`, with the
/// velocity sign flipped wherever `Y < 0`.
pub fn bounce_path(path: &PathGrid) -> PathGrid {
    let y: Vec<f64> = path.y.iter().map(|v| v.abs()).collect();
    let w = path
        .w
        .iter()
        .zip(&path.y)
        .map(|(&w, &y)| if y < 0.0 { -w } else { w })
        .collect::<Vec<_>>();
    PathGrid { step: path.step, v0: w[0], x0: path.x0.abs(), w, y }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_steps_single_point() {
        let p = simulate_kolmogorov(0, 0.1, 0.3, -0.2, &RngStream::new(1, 0), &SimOptions::default()).unwrap();
        assert_eq!(p.y, vec![0.3]);
        assert_eq!(p.w, vec![-0.2]);
    }

    #[test]
    fn noiseless_straight_line() {
        let p = simulate_kolmogorov(2, 0.5, 0.0, 1.0, &RngStream::new(1, 0), &SimOptions::noiseless()).unwrap();
        assert_eq!(p.y, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn rejects_bad_step() {
        let s = RngStream::new(1, 0);
        assert!(matches!(
            simulate_kolmogorov(10, 0.0, 0.0, 0.0, &s, &SimOptions::default()),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            simulate_kolmogorov(10, -1.0, 0.0, 0.0, &s, &SimOptions::default()),
            Err(Error::InvalidArgument(_))
        ));
        let capped = SimOptions { horizon_cap: 1.0, ..SimOptions::default() };
        assert!(matches!(
            simulate_kolmogorov(100, 0.1, 0.0, 0.0, &s, &capped),
            Err(Error::ResourceLimit(_))
        ));
    }

    #[test]
    fn path_starts_at_initial_state() {
        for opts in [SimOptions::default(), SimOptions::exact_joint()] {
            let p = simulate_kolmogorov(50, 0.01, 0.25, -1.5, &RngStream::new(3, 2), &opts).unwrap();
            assert_eq!(p.w[0], -1.5);
            assert_eq!(p.y[0], 0.25);
            assert_eq!(p.len(), 51);
        }
    }

    #[test]
    fn layout_halving_keeps_root() {
        let (r1, d1) = bridge_layout(0.01).unwrap();
        let (r2, d2) = bridge_layout(0.005).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(d2, d1 + 1);
        assert_eq!(r1 / 2f64.powi(d1 as i32), 0.01);
    }

    #[test]
    fn stopped_straight_line_lifetime() {
        let run = simulate_stopped_langevin(1.0, -1.0, 0.25, &RngStream::new(0, 0), &SimOptions::noiseless()).unwrap();
        assert_eq!(run.lifetime, Lifetime::Observed { time: 1.0 });
        assert_eq!(*run.path.y.last().unwrap(), 0.0);
    }

    #[test]
    fn stopped_censoring() {
        let opts = SimOptions { horizon_cap: 1.0, ..SimOptions::noiseless() };
        let run = simulate_stopped_langevin(1.0, 1.0, 0.25, &RngStream::new(0, 0), &opts).unwrap();
        assert!(matches!(run.lifetime, Lifetime::Censored { .. }));
        assert!(simulate_stopped_langevin(0.0, 1.0, 0.25, &RngStream::new(0, 0), &opts).is_err());
    }

    fn grid(y: Vec<f64>, w: Vec<f64>) -> PathGrid {
        PathGrid { step: 1.0, x0: y[0], v0: w[0], w, y }
    }

    #[test]
    fn bounce_examples() {
        let p = grid(vec![0.0, 1.0, 2.0], vec![1.0, 1.0, 1.0]);
        assert_eq!(bounce_path(&p), p);
        let q = bounce_path(&grid(vec![0.0, -1.0, -2.0], vec![0.0, -1.0, -1.0]));
        assert_eq!(q.y, vec![0.0, 1.0, 2.0]);
        assert_eq!(q.w, vec![0.0, 1.0, 1.0]);
    }

    #[test]
    fn csv_header() {
        let p = simulate_kolmogorov(2, 0.5, 0.0, 1.0, &RngStream::new(1, 0), &SimOptions::noiseless()).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "t,w,y\n0,1,0\n0.5,1,0.5\n1,1,1\n");
    }
}
