//! Symmetric stable process of index 1/3: an independent increment sampler
//! and the two-sided exit law from `[0, eps]`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use rand::Rng;
use rand_distr::{Exp1, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quad;
use crate::rng::RngStream;

pub const ALPHA: f64 = 1.0 / 3.0;
pub const DEFAULT_STEP_CAP: u64 = 100_000_000;

/// Number of time steps per unit of the natural exit time scale used by
/// [`default_exit_step`].
pub const EXIT_STEPS_PER_SCALE: f64 = 2000.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StableConfig {
    pub scale: f64,
    pub step: f64,
}

impl StableConfig {
    pub fn new(scale: f64, step: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(invalid(format!("scale must be positive, got {scale}")));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(invalid(format!("step must be positive, got {step}")));
        }
        Ok(Self { scale, step })
    }

    pub fn alpha(&self) -> f64 {
        ALPHA
    }

    /// Spatial scale of one increment: `scale * step^(1/alpha)`.
    pub fn increment_scale(&self) -> f64 {
        self.scale * self.step.powi(3)
    }
}

/// Time step giving about [`EXIT_STEPS_PER_SCALE`] steps over the time the
/// process needs to travel a distance `eps`.
pub fn default_exit_step(eps: f64, scale: f64) -> f64 {
    (eps / scale).cbrt() / EXIT_STEPS_PER_SCALE
}

/// Standard symmetric 1/3-stable variate (Chambers–Mallows–Stuck).
#[inline]
pub fn standard_stable<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let v: f64 = rng.sample(Uniform::new(-FRAC_PI_2, FRAC_PI_2).expect("valid range"));
    let e: f64 = rng.sample(Exp1);
    let c = v.cos();
    let r = (2.0 * v / 3.0).cos() / e;
    (v / 3.0).sin() / (c * c * c) * r * r
}

/// One increment over `cfg.step`.
pub fn sample_stable_increment<R: Rng + ?Sized>(cfg: &StableConfig, rng: &mut R) -> f64 {
    cfg.increment_scale() * standard_stable(rng)
}

/// `n` increments from the stream `rng`.
pub fn sample_increments(cfg: &StableConfig, rng: &RngStream, n: usize) -> Vec<f64> {
    let mut gen = rng.rng();
    (0..n).map(|_| sample_stable_increment(cfg, &mut gen)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Above,
    Below,
}

impl Side {
    pub fn as_str(&self) -> &'static str {
        match self {
            Side::Above => "above",
            Side::Below => "below",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExitRecord {
    pub x: f64,
    pub eps: f64,
    pub side: Side,
    pub position: f64,
    pub steps_used: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ExitOutcome {
    Exited(ExitRecord),
    Censored { x: f64, eps: f64, position: f64, steps_used: u64 },
}

impl ExitOutcome {
    pub fn record(&self) -> Option<&ExitRecord> {
        match self {
            ExitOutcome::Exited(r) => Some(r),
            ExitOutcome::Censored { .. } => None,
        }
    }
}

/// Random walk `x + Σ increments` until it leaves `[0, eps]`.
pub fn exit_interval(x: f64, eps: f64, cfg: &StableConfig, rng: &RngStream, step_cap: u64) -> Result<ExitOutcome> {
    if !(eps > 0.0) || !(x > 0.0 && x < eps) {
        return Err(invalid(format!("need 0 < x < eps, got x={x}, eps={eps}")));
    }
    let mut gen = rng.rng();
    let scale = cfg.increment_scale();
    let mut pos = x;
    for n in 1..=step_cap {
        pos += scale * standard_stable(&mut gen);
        if pos > eps || pos < 0.0 {
            let side = if pos > eps { Side::Above } else { Side::Below };
            return Ok(ExitOutcome::Exited(ExitRecord { x, eps, side, position: pos, steps_used: n }));
        }
    }
    Ok(ExitOutcome::Censored { x, eps, position: pos, steps_used: step_cap })
}

/// CSV with header `x,eps,side,position,steps_used,censored`.
pub fn write_exits_csv<W: Write>(outcomes: &[ExitOutcome], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["x", "eps", "side", "position", "steps_used", "censored"])?;
    for o in outcomes {
        let row = match o {
            ExitOutcome::Exited(r) => [
                r.x.to_string(),
                r.eps.to_string(),
                r.side.as_str().to_string(),
                r.position.to_string(),
                r.steps_used.to_string(),
                "false".to_string(),
            ],
            ExitOutcome::Censored { x, eps, position, steps_used } => [
                x.to_string(),
                eps.to_string(),
                String::new(),
                position.to_string(),
                steps_used.to_string(),
                "true".to_string(),
            ],
        };
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Density of the overshoot position `y > eps` for the process started at
/// `x` and killed on leaving `[0, eps]`.
pub fn rogozin_density(x: f64, eps: f64, y: f64) -> Result<f64> {
    if !(x > 0.0 && x < eps && y >= eps) {
        return Err(invalid(format!("need 0 < x < eps < y, got x={x}, eps={eps}, y={y}")));
    }
    if y == eps {
        return Err(Error::Range(format!("density is infinite at y = eps = {eps}")));
    }
    Ok(rogozin_unchecked(x, eps, y))
}

#[inline]
fn rogozin_unchecked(x: f64, eps: f64, y: f64) -> f64 {
    let sixth = 1.0 / 6.0;
    (x * (eps - x)).powf(sixth) / ((y - eps) * y).powf(sixth) / (y - x) / (2.0 * PI)
}

/// Probability of leaving `[0, eps]` through the upper end, started at `x`.
///
/// With `u = eps / y` the integrand is `K (1-u)^(-1/6) u^(-2/3) / (eps - x u)`
/// on `(0, 1)`; the pieces `u = t³` on `[0, 1/2]` and `1 - u = s⁶` on
/// `[1/2, 1]` remove both endpoint singularities.
pub fn rogozin_exit_probability(x: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0) || !(x > 0.0 && x < eps) {
        return Err(invalid(format!("need 0 < x < eps, got x={x}, eps={eps}")));
    }
    let k = (x * (eps - x)).powf(1.0 / 6.0) * eps.powf(2.0 / 3.0) / (2.0 * PI);
    let lower = quad::integrate(
        |t| {
            let t3 = t * t * t;
            3.0 * k * (1.0 - t3).powf(-1.0 / 6.0) / (eps - x * t3)
        },
        0.0,
        0.5f64.cbrt(),
        5e-9,
    )?;
    let upper = quad::integrate(
        |s| {
            let s6 = s.powi(6);
            6.0 * k * s.powi(4) * (1.0 - s6).powf(-2.0 / 3.0) / (eps - x * (1.0 - s6))
        },
        0.0,
        0.5f64.powf(1.0 / 6.0),
        5e-9,
    )?;
    Ok((lower + upper).clamp(0.0, 1.0))
}

/// Mass of the overshoot density on `[a, b]` with `eps <= a < b`.
pub fn rogozin_mass(x: f64, eps: f64, a: f64, b: f64) -> Result<f64> {
    if !(x > 0.0 && x < eps && a >= eps && b > a) {
        return Err(invalid(format!("need 0 < x < eps <= a < b, got x={x}, eps={eps}, a={a}, b={b}")));
    }
    quad::integrate_singular(|y| rogozin_unchecked(x, eps, y), a, b, 1e-11)
}

/// Euler Beta function via log-gamma.
pub fn beta(a: f64, b: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
}

/// Normalised entrance-overshoot density `(u-1)^(-1/6) u^(-7/6) / B(1/3, 5/6)`
/// for `u > 1`.
pub fn entrance_density(u: f64) -> f64 {
    if u <= 1.0 {
        return 0.0;
    }
    (u - 1.0).powf(-1.0 / 6.0) * u.powf(-7.0 / 6.0) / beta(1.0 / 3.0, 5.0 / 6.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_example() {
        let d = rogozin_density(0.5, 1.0, 2.0).unwrap();
        let direct = 0.5f64.powf(1.0 / 6.0).powi(2) * 2f64.powf(-1.0 / 6.0) / 1.5 / (2.0 * PI);
        assert!((d - direct).abs() < 1e-15);
        assert!((d - 0.07503).abs() < 1e-5);
    }

    #[test]
    fn density_errors() {
        assert!(matches!(rogozin_density(0.5, 1.0, 1.0), Err(Error::Range(_))));
        assert!(matches!(rogozin_density(1.5, 1.0, 2.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(rogozin_density(0.5, 1.0, 0.7), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn density_limits() {
        let far = rogozin_density(0.5, 1.0, 1e8).unwrap();
        let asym = 0.5f64.powf(1.0 / 3.0) * 1e8f64.powf(-4.0 / 3.0) / (2.0 * PI);
        assert!((far / asym - 1.0).abs() < 1e-6);
        assert!(rogozin_density(1e-12, 1.0, 2.0).unwrap() < 1e-3);
    }

    #[test]
    fn half_way_is_even() {
        let p = rogozin_exit_probability(0.5, 1.0).unwrap();
        assert!((p - 0.5).abs() < 1e-6, "{p}");
    }

    #[test]
    fn probability_against_mass() {
        // Independent route: tanh-sinh on the original variable.
        for &x in &[0.1, 0.3, 0.8] {
            let p = rogozin_exit_probability(x, 1.0).unwrap();
            let body = rogozin_mass(x, 1.0, 1.0, 1e6).unwrap();
            // Beyond 1e6 the density is within 1e-6 relative of its power tail.
            let tail = (x * (1.0 - x)).powf(1.0 / 6.0) * 3.0 * 1e6f64.powf(-1.0 / 3.0) / (2.0 * PI);
            assert!((p - body - tail).abs() < 1e-6, "x={x} p={p} body={body} tail={tail}");
        }
    }

    #[test]
    fn complementarity_and_monotonicity() {
        let mut prev = 0.0;
        for i in 1..=50 {
            let x = i as f64 / 51.0;
            let p = rogozin_exit_probability(x, 1.0).unwrap();
            let q = rogozin_exit_probability(1.0 - x, 1.0).unwrap();
            assert!((p + q - 1.0).abs() < 1e-6);
            assert!(p > prev);
            prev = p;
        }
    }

    #[test]
    fn small_x_power() {
        let xs = [1e-4, 1e-3, 1e-2];
        let lx: Vec<f64> = xs.iter().map(|x: &f64| x.ln()).collect();
        let lp: Vec<f64> = xs.iter().map(|&x| rogozin_exit_probability(x, 1.0).unwrap().ln()).collect();
        let mx = lx.iter().sum::<f64>() / 3.0;
        let mp = lp.iter().sum::<f64>() / 3.0;
        let num: f64 = lx.iter().zip(&lp).map(|(a, b)| (a - mx) * (b - mp)).sum();
        let den: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
        assert!((num / den - 1.0 / 6.0).abs() < 0.01, "{}", num / den);
    }

    #[test]
    fn beta_value() {
        assert!((beta(1.0 / 3.0, 5.0 / 6.0) - 3.259_553_792_057_86).abs() < 1e-10);
        let q = quad::integrate_singular(entrance_density, 1.0, 1e12, 1e-12).unwrap();
        let tail = 3.0 * 1e12f64.powf(-1.0 / 3.0) / beta(1.0 / 3.0, 5.0 / 6.0);
        assert!((q + tail - 1.0).abs() < 1e-6, "{}", q + tail);
    }

    #[test]
    fn exit_argument_checks() {
        let cfg = StableConfig::new(1.0, 1e-3).unwrap();
        let s = RngStream::new(1, 0);
        assert!(exit_interval(0.0, 1.0, &cfg, &s, 10).is_err());
        assert!(exit_interval(1.0, 1.0, &cfg, &s, 10).is_err());
        assert!(StableConfig::new(0.0, 1.0).is_err());
    }

    #[test]
    fn exit_overshoot_leaves_interval() {
        let cfg = StableConfig::new(1.0, default_exit_step(1.0, 1.0)).unwrap();
        for r in 0..200 {
            match exit_interval(0.3, 1.0, &cfg, &RngStream::new(3, r), DEFAULT_STEP_CAP).unwrap() {
                ExitOutcome::Exited(e) => {
                    assert!(e.position < 0.0 || e.position > 1.0);
                    assert_eq!(e.side == Side::Above, e.position > 1.0);
                }
                ExitOutcome::Censored { .. } => panic!("censored"),
            }
        }
        let c = exit_interval(0.5, 1.0, &StableConfig::new(1.0, 1e-9).unwrap(), &RngStream::new(0, 0), 3).unwrap();
        assert!(matches!(c, ExitOutcome::Censored { steps_used: 3, .. }));
    }

    #[test]
    fn csv_layout() {
        let rec = ExitOutcome::Exited(ExitRecord { x: 0.5, eps: 1.0, side: Side::Above, position: 2.5, steps_used: 7 });
        let mut buf = Vec::new();
        write_exits_csv(&[rec], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,eps,side,position,steps_used,censored\n0.5,1,above,2.5,7,false\n");
    }
}
