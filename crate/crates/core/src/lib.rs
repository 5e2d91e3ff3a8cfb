//! Loss-aware quantum non-Gaussianity thresholds for photon click statistics.

pub mod counts_analyzer;
pub mod error;
pub mod measured;
pub mod optim;
pub mod photon_statistics;
pub mod source_simulator;
pub mod threshold_solver;

pub use error::{Error, Result};
