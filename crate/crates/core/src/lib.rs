//! Dynamics, control, fault handling, sensing, energy and the simulation
//! harness for a quadrotor hanging under a neutrally buoyant balloon.

pub mod controller;
pub mod dynamics;
pub mod energy;
pub mod error;
pub mod fault;
pub mod sensors;
pub mod sim;

pub use controller::{
    control_step, ControlOptions, ControlOutput, ControllerState, GainSet, Setpoint,
};
pub use dynamics::{AeroParams, MotorThrusts, VehicleState};
pub use energy::{BalloonSpec, BatteryModel};
pub use error::{Error, Result};
pub use fault::{FaultConfig, FaultStatus, Rotor};
pub use sensors::{SensorSuite, WindModel};
pub use sim::harness::{run_scenario, RunResult};
pub use sim::montecarlo::{run_montecarlo, McSummary, MonteCarloSpec};
pub use sim::scenario::{Scenario, ScenarioKind};
pub use sim::trace::TraceRecord;
