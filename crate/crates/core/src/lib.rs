//! Threshold scheduling for Poisson ad hoc networks: outage bounds,
//! transmission capacity and Monte Carlo validation.

pub mod analysis;
pub mod channel;
pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod montecarlo;
pub mod quad;
pub mod schedulers;
pub mod solvers;

pub use config::{DiasLaw, DistanceLaw, IcFormula, NetworkConfig};
pub use error::{Error, Result};
pub use schedulers::{SchedulerKind, ThresholdPolicy};
