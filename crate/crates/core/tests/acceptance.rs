//! Monte Carlo acceptance checks 1 to 15 at their full sample sizes.
//!
//! Prints one `PASS`/`FAIL` line per check and fails if any check fails.
//! Set `REFLANG_CHECKS=3,7` to run a subset.

use std::time::Instant;

use reflang::experiments::criteria::{evaluate, TITLES};
use reflang::Execution;

fn selected() -> Vec<usize> {
    match std::env::var("REFLANG_CHECKS") {
        Ok(s) if !s.trim().is_empty() => {
            s.split(',').map(|t| t.trim().parse().expect("REFLANG_CHECKS takes comma-separated ids")).collect()
        }
        _ => (1..=TITLES.len()).collect(),
    }
}

#[test]
fn acceptance() {
    let exec = Execution::default();
    let mut failed = Vec::new();
    println!();
    for id in selected() {
        let t0 = Instant::now();
        let line = match evaluate(id, exec) {
            Ok(o) => {
                if !o.passed {
                    failed.push(id);
                }
                let verdict = if o.passed { "PASS" } else { "FAIL" };
                format!("{verdict} {id:>2} {}: {} [{:.1}s]", o.title, o.summary, t0.elapsed().as_secs_f64())
            }
            Err(e) => {
                failed.push(id);
                format!("FAIL {id:>2} {}: error: {e}", id.checked_sub(1).and_then(|i| TITLES.get(i)).unwrap_or(&"unknown check"))
            }
        };
        println!("{line}");
    }
    assert!(failed.is_empty(), "failed checks: {failed:?}");
}
