//! Simulation and statistics for a Langevin (integrated Brownian motion)
//! process reflected inelastically at a wall, together with the symmetric
//! 1/3-stable process obtained by reading the free position at the inverse
//! local time of the velocity at zero.

pub mod adaptive;
pub mod error;
pub mod estimators;
pub mod excursions;
pub mod exec;
pub mod experiments;
pub mod local_time;
pub mod paths;
pub mod quad;
pub mod reflect;
pub mod rng;
pub mod stable;

pub use error::{Error, Result};
pub use exec::Execution;
pub use rng::RngStream;

/// Library version recorded in every experiment report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
