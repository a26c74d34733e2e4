//! Simulation, analytic modelling and baselines for QAOA protected by the
//! `[[k+2, k, 2]]` Iceberg error-detection code.

pub mod baselines;
pub mod circuits;
pub mod config;
pub mod error;
pub mod experiments;
pub mod fitting;
pub mod iceberg;
pub mod montecarlo;
pub mod noise;
pub mod oracle;
pub mod perfmodel;
pub mod problems;
pub mod qaoa;

pub use error::{Error, Result};
