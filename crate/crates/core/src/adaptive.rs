//! State-dependent time stepping for the Langevin pair.
//!
//! Every step is an exact Gaussian transition of `(W, Y)`, so the only
//! discretisation error is in locating boundary crossings. Step sizes
//! scale with the distance `d` to the nearest boundary as
//! `κ · min(d^(2/3), d / |w|)` (the second term only while moving toward
//! it) and never drop below a floor, which plays the role of the grid
//! step of a uniform path.
//!
//! [`ExcursionSampler`] runs the reflected process on its own clock. A
//! flat stretch of the free path ends exactly when the velocity returns to
//! 0, so it is skipped in one move to the state `(0, 0)`; from there a
//! floor step either starts an excursion or pushes the free path to a new
//! infimum.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::paths::exact_increment;

pub const DEFAULT_KAPPA: f64 = 0.02;
pub const DEFAULT_FLOOR_STEP: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveConfig {
    pub floor_step: f64,
    pub kappa: f64,
    pub noise: bool,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self { floor_step: DEFAULT_FLOOR_STEP, kappa: DEFAULT_KAPPA, noise: true }
    }
}

impl AdaptiveConfig {
    pub fn with_floor(floor_step: f64) -> Self {
        Self { floor_step, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.floor_step > 0.0 && self.floor_step.is_finite()) {
            return Err(invalid(format!("floor step must be positive, got {}", self.floor_step)));
        }
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(invalid(format!("kappa must lie in (0, 1], got {}", self.kappa)));
        }
        Ok(())
    }

    /// Step for a state at distance `dist` from the boundary, approaching it
    /// at speed `closing` (zero or negative when moving away).
    #[inline]
    pub fn step_for(&self, dist: f64, closing: f64) -> f64 {
        let mut dt = dist.powf(2.0 / 3.0);
        if closing > 0.0 {
            dt = dt.min(dist / closing);
        }
        (self.kappa * dt).max(self.floor_step)
    }

    #[inline]
    fn increment<R: Rng + ?Sized>(&self, rng: &mut R, dt: f64) -> (f64, f64) {
        if self.noise {
            exact_increment(rng, dt)
        } else {
            (0.0, 0.0)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StopOutcome {
    /// Crossed 0 at `time` with velocity `velocity`.
    Hit { time: f64, velocity: f64 },
    /// Reached the upper threshold.
    Reached { time: f64 },
    Censored { time: f64 },
}

/// Langevin process from `(x, v0)` run until it crosses 0, reaches
/// `threshold` (if finite), or its clock passes `time_cap`.
pub fn run_stopped<R: Rng + ?Sized>(
    x: f64,
    v0: f64,
    threshold: f64,
    cfg: &AdaptiveConfig,
    rng: &mut R,
    time_cap: f64,
) -> Result<StopOutcome> {
    cfg.validate()?;
    if !(x > 0.0) {
        return Err(invalid(format!("start position must be positive, got {x}")));
    }
    if x >= threshold {
        return Ok(StopOutcome::Reached { time: 0.0 });
    }
    if !cfg.noise && v0 == 0.0 {
        return Ok(StopOutcome::Censored { time: time_cap });
    }
    let (mut y, mut w, mut t) = (x, v0, 0.0);
    while t < time_cap {
        let lower = cfg.step_for(y, -w);
        let dt = if threshold.is_finite() { lower.min(cfg.step_for(threshold - y, w)) } else { lower };
        let (dw, fl) = cfg.increment(rng, dt);
        let yn = y + w * dt + fl;
        if yn <= 0.0 {
            let frac = y / (y - yn);
            return Ok(StopOutcome::Hit { time: t + frac * dt, velocity: w + frac * dw });
        }
        t += dt;
        if yn >= threshold {
            return Ok(StopOutcome::Reached { time: t });
        }
        y = yn;
        w += dw;
    }
    Ok(StopOutcome::Censored { time: t })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoPassage {
    /// Time after the excursion start.
    pub time: f64,
    /// Position when the velocity first vanishes after passing the level.
    pub position: f64,
}

/// Summary of one excursion away from 0 on the reflected clock.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcursionSummary {
    pub start_time: f64,
    pub zeta: f64,
    pub height: f64,
    pub v_end: f64,
    pub d_first_zero: f64,
}

impl ExcursionSummary {
    pub fn end_time(&self) -> f64 {
        self.start_time + self.zeta
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledExcursion {
    pub summary: ExcursionSummary,
    /// One entry per level of [`ExcursionSampler::rho_levels`].
    pub rho: Vec<Option<RhoPassage>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SamplerEvent {
    Complete(SampledExcursion),
    /// The reflected clock or the transition budget ran out; `x` is the
    /// position there.
    Limit { x: f64, v: f64 },
}

/// Reflected clock and number of transitions drawn so far.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SamplerState {
    pub clock: f64,
    pub transitions: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Limits {
    pub clock: f64,
    pub transitions: u64,
}

impl Limits {
    pub const NONE: Limits = Limits { clock: f64::INFINITY, transitions: u64::MAX };

    fn reached(&self, st: &SamplerState) -> bool {
        st.clock >= self.clock || st.transitions >= self.transitions
    }
}

/// Excursions drawn under a transition budget.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BudgetRun {
    pub excursions: Vec<SampledExcursion>,
    /// Excursion cut short by the budget (0 or 1).
    pub censored: usize,
    pub transitions: u64,
    pub clock: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcursionSampler {
    pub cfg: AdaptiveConfig,
    pub rho_levels: Vec<f64>,
}

impl ExcursionSampler {
    pub fn new(cfg: AdaptiveConfig, rho_levels: Vec<f64>) -> Result<Self> {
        cfg.validate()?;
        if rho_levels.iter().any(|e| !(*e > 0.0)) {
            return Err(invalid("rho levels must be positive"));
        }
        Ok(Self { cfg, rho_levels })
    }

    /// Advance the reflected process from the boundary until the next
    /// excursion ends or a limit is reached.
    pub fn next<R: Rng + ?Sized>(&self, rng: &mut R, st: &mut SamplerState, limits: Limits) -> SamplerEvent {
        let h = self.cfg.floor_step;
        let mut w0 = 0.0;
        loop {
            if limits.reached(st) {
                return SamplerEvent::Limit { x: 0.0, v: 0.0 };
            }
            let dt = h.min(limits.clock - st.clock);
            st.transitions += 1;
            let (dw, fl) = self.cfg.increment(rng, dt);
            let x = w0 * dt + fl;
            let w = w0 + dw;
            if x <= 0.0 {
                // New infimum of the free path: no reflected time elapses.
                w0 = if w > 0.0 { w } else { 0.0 };
                if !self.cfg.noise && w0 == 0.0 {
                    return SamplerEvent::Limit { x: 0.0, v: 0.0 };
                }
                continue;
            }
            let start = st.clock;
            st.clock += dt;
            return self.run_excursion(rng, st, limits, start, dt, x, w);
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn run_excursion<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        st: &mut SamplerState,
        limits: Limits,
        start: f64,
        first_dt: f64,
        mut x: f64,
        mut w: f64,
    ) -> SamplerEvent {
        let mut age = first_dt;
        let mut height = x;
        let mut d_first_zero = if w <= 0.0 { Some(0.0) } else { None };
        let mut passed: Vec<bool> = self.rho_levels.iter().map(|&e| x >= e).collect();
        let mut rho: Vec<Option<RhoPassage>> = passed
            .iter()
            .map(|&p| (p && w <= 0.0).then_some(RhoPassage { time: age, position: x }))
            .collect();
        loop {
            if limits.reached(st) {
                return SamplerEvent::Limit { x, v: w };
            }
            let dt = self.cfg.step_for(x, -w).min(limits.clock - st.clock);
            st.transitions += 1;
            let (dw, fl) = self.cfg.increment(rng, dt);
            let xn = x + w * dt + fl;
            if xn <= 0.0 {
                let frac = x / (x - xn);
                st.clock += frac * dt;
                let summary = ExcursionSummary {
                    start_time: start,
                    zeta: age + frac * dt,
                    height,
                    v_end: w + frac * dw,
                    d_first_zero: d_first_zero.unwrap_or(age),
                };
                return SamplerEvent::Complete(SampledExcursion { summary, rho });
            }
            let prev_age = age;
            let prev_w = w;
            let prev_x = x;
            age += dt;
            st.clock += dt;
            x = xn;
            w += dw;
            if x > height {
                height = x;
            }
            if d_first_zero.is_none() && w <= 0.0 {
                d_first_zero = Some(prev_age);
            }
            // A pending passage also ends if the velocity touched 0 between two
            // positive samples (Brownian bridge crossing probability).
            let pending = passed.iter().zip(&rho).any(|(p, r)| *p && r.is_none());
            let touched = w <= 0.0
                || (pending && prev_w > 0.0 && rng.random::<f64>() < (-2.0 * prev_w * w / dt).exp());
            for ((level, p), r) in self.rho_levels.iter().zip(passed.iter_mut()).zip(rho.iter_mut()) {
                if *p && r.is_none() && touched {
                    *r = Some(RhoPassage { time: age, position: x.max(prev_x) });
                }
                if !*p && x >= *level {
                    *p = true;
                    if w <= 0.0 {
                        *r = Some(RhoPassage { time: age, position: x });
                    }
                }
            }
        }
    }

    /// `count` consecutive complete excursions (the clock is unbounded).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<SampledExcursion> {
        let mut st = SamplerState::default();
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            match self.next(rng, &mut st, Limits::NONE) {
                SamplerEvent::Complete(e) => out.push(e),
                SamplerEvent::Limit { .. } => break,
            }
        }
        out
    }

    /// Consecutive excursions until `max_transitions` transitions have been
    /// drawn; an excursion still running at that point is censored.
    pub fn sample_budget<R: Rng + ?Sized>(&self, rng: &mut R, max_transitions: u64) -> BudgetRun {
        let mut st = SamplerState::default();
        let limits = Limits { clock: f64::INFINITY, transitions: max_transitions };
        let mut run = BudgetRun::default();
        loop {
            match self.next(rng, &mut st, limits) {
                SamplerEvent::Complete(e) => run.excursions.push(e),
                SamplerEvent::Limit { x, .. } => {
                    run.censored = usize::from(x > 0.0);
                    break;
                }
            }
        }
        run.transitions = st.transitions;
        run.clock = st.clock;
        run
    }

    /// Reflected process up to reflected time `horizon`: the completed
    /// excursions and the position at the horizon.
    pub fn run_until<R: Rng + ?Sized>(&self, rng: &mut R, horizon: f64) -> (Vec<ExcursionSummary>, f64) {
        let mut st = SamplerState::default();
        let limits = Limits { clock: horizon, transitions: u64::MAX };
        let mut out = Vec::new();
        loop {
            match self.next(rng, &mut st, limits) {
                SamplerEvent::Complete(e) => out.push(e.summary),
                SamplerEvent::Limit { x, .. } => return (out, x),
            }
        }
    }

    /// Position of the reflected process at reflected time `t`.
    pub fn position_at<R: Rng + ?Sized>(&self, rng: &mut R, t: f64) -> f64 {
        let mut st = SamplerState::default();
        let limits = Limits { clock: t, transitions: u64::MAX };
        loop {
            if let SamplerEvent::Limit { x, .. } = self.next(rng, &mut st, limits) {
                return x;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn step_rule() {
        let cfg = AdaptiveConfig { floor_step: 1e-6, kappa: 0.1, noise: true };
        assert!((cfg.step_for(8.0, 0.0) - 0.4).abs() < 1e-12);
        assert!((cfg.step_for(8.0, 80.0) - 0.01).abs() < 1e-12);
        assert!((cfg.step_for(8.0, -80.0) - 0.4).abs() < 1e-12);
        assert_eq!(cfg.step_for(1e-30, 0.0), 1e-6);
    }

    #[test]
    fn noiseless_straight_line() {
        let cfg = AdaptiveConfig { noise: false, ..AdaptiveConfig::default() };
        let mut rng = RngStream::new(0, 0).rng();
        match run_stopped(1.0, -1.0, f64::INFINITY, &cfg, &mut rng, 10.0).unwrap() {
            StopOutcome::Hit { time, velocity } => {
                assert!((time - 1.0).abs() < 1e-9, "{time}");
                assert_eq!(velocity, -1.0);
            }
            other => panic!("{other:?}"),
        }
        let out = run_stopped(0.5, 0.0, 1.0, &cfg, &mut rng, 10.0).unwrap();
        assert!(matches!(out, StopOutcome::Censored { .. }));
        assert!(matches!(run_stopped(1.0, 0.0, 1.0, &cfg, &mut rng, 10.0).unwrap(), StopOutcome::Reached { time } if time == 0.0));
        assert!(run_stopped(0.0, 0.0, 1.0, &cfg, &mut rng, 10.0).is_err());
    }

    #[test]
    fn excursion_invariants() {
        let sampler = ExcursionSampler::new(AdaptiveConfig::default(), vec![0.01, 0.1]).unwrap();
        let mut rng = RngStream::new(11, 0).rng();
        let ex = sampler.sample(&mut rng, 2000);
        assert_eq!(ex.len(), 2000);
        let mut last_end = 0.0;
        for e in &ex {
            let s = &e.summary;
            assert!(s.zeta > 0.0 && s.height > 0.0);
            assert!(s.d_first_zero <= s.zeta);
            assert!(s.start_time >= last_end * (1.0 - 1e-12));
            last_end = s.end_time();
            if let (Some(a), Some(b)) = (e.rho[0], e.rho[1]) {
                assert!(a.time <= b.time);
            }
            if s.height < 0.1 {
                assert!(e.rho[1].is_none());
            }
        }
    }

    #[test]
    fn horizon_is_respected() {
        let sampler = ExcursionSampler::new(AdaptiveConfig::default(), vec![]).unwrap();
        let mut rng = RngStream::new(4, 0).rng();
        let (ex, x) = sampler.run_until(&mut rng, 50.0);
        assert!(x >= 0.0);
        assert!(ex.last().is_none_or(|e| e.end_time() <= 50.0));
    }
}
