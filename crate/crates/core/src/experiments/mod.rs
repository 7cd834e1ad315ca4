//! Named experiments shared by the command-line front end and the
//! acceptance suite.
//!
//! Each experiment takes a parameter set that deserialises from a flat
//! manifest (every field has a default, unknown keys are rejected), checks
//! it before any simulation starts, and returns its data together with one
//! [`EstimatorReport`] per statistical check.

pub mod criteria;
mod dimension;
mod entrance;
mod excursions;
mod exit_law;
mod scaling;
mod simulate;

pub use dimension::{run_dimension, DimensionOutcome, DimensionParams};
pub use entrance::{run_entrance, EntranceOutcome, EntranceParams};
pub use excursions::{
    run_excursions, Engine, ExcursionOutcome, ExcursionParams, ReplicaCounts, VelocityZeroRefinement, RATIO_HIGH,
    RATIO_LOW,
};
pub use exit_law::{run_exit_law, ExitLawOutcome, ExitLawParams};
pub use scaling::{run_scaling, ScalingOutcome, ScalingParams};
pub use simulate::{run_simulate, IncrementMoments, LocalTimeRefinement, SimulateOutcome, SimulateParams};

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::estimators::{hill_tail_index, Decision, EstimatorReport};

pub fn all_passed(reports: &[EstimatorReport]) -> bool {
    reports.iter().all(|r| r.decision.passed())
}

pub(crate) fn report(
    test: &str,
    inputs: Value,
    statistic: f64,
    p_value: Option<f64>,
    stderr: Option<f64>,
    pass: bool,
    seed_manifest: Value,
) -> EstimatorReport {
    EstimatorReport {
        test: test.to_string(),
        inputs,
        statistic,
        p_value,
        stderr,
        decision: Decision::from_bool(pass),
        seed_manifest,
    }
}

pub(crate) fn seeds(seed: u64, streams: Value) -> Value {
    json!({ "seed": seed, "streams": streams })
}

/// Hill index of `values` against `target ± tol`. A sample too small for
/// the estimator yields a failing report with a NaN statistic.
pub(crate) fn hill_report(
    test: &str,
    values: &[f64],
    k: Option<usize>,
    target: f64,
    tol: f64,
    seed_manifest: Value,
) -> EstimatorReport {
    let k = k.unwrap_or_else(|| crate::estimators::default_k(values.len()));
    let inputs = json!({ "n": values.len(), "k": k, "target": target, "tolerance": tol });
    match hill_tail_index(values, k) {
        Ok(est) => report(
            test,
            inputs,
            est.index_hat,
            None,
            Some(est.stderr),
            (est.index_hat - target).abs() <= tol,
            seed_manifest,
        ),
        Err(e) => {
            let mut inputs = inputs;
            inputs["error"] = json!(e.to_string());
            report(test, inputs, f64::NAN, None, None, false, seed_manifest)
        }
    }
}

pub(crate) fn param_error(key: &str, msg: impl std::fmt::Display) -> Error {
    Error::InvalidArgument(format!("{key}: {msg}"))
}

pub(crate) fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(param_error(key, format!("must be positive and finite, got {v}")))
    }
}

pub(crate) fn nonzero<T: PartialEq + Default + std::fmt::Display>(key: &str, v: T) -> Result<()> {
    if v == T::default() {
        Err(param_error(key, "must be at least 1"))
    } else {
        Ok(())
    }
}
