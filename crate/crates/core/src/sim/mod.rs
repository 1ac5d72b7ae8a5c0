//! Scenario harness: configuration, the simulation loop, traces, campaigns.

pub mod calibrate;
pub mod config;
pub mod estimator;
pub mod faultscan;
pub mod harness;
pub mod metrics;
pub mod montecarlo;
pub mod scenario;
pub mod trace;
