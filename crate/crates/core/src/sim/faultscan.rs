//! Offline replay of the fault detector over a logged trace.

use std::io::Read;

use crate::dynamics::{AeroParams, MotorThrusts};
use crate::error::Result;
use crate::fault::{Detector, FaultConfig, Measurement, Rotor};
use crate::sim::scenario::Scenario;
use crate::sim::trace::{read_trace, TraceRecord};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub t: f64,
    pub rotor: Rotor,
}

/// Runs the detector over logged commands and measurements.
///
/// Heading comes from the `psi` column, yaw rate from the gyro column and
/// lateral velocity from the estimate columns. Vertical acceleration is the
/// finite difference of `vz`, paired with the interval-mean vertical speed.
pub fn fault_scan(
    records: &[TraceRecord],
    config: &FaultConfig,
    params: &AeroParams,
    psi_d: f64,
) -> Result<Vec<Detection>> {
    let mut detector = Detector::new(*config, *params);
    let mut prev_cmd = MotorThrusts::ZERO;
    let mut out = Vec::new();
    for (k, r) in records.iter().enumerate() {
        let (a_z, v_z) = match k.checked_sub(1).map(|j| &records[j]) {
            Some(p) => (
                (r.state.v_z - p.state.v_z) / (r.t - p.t),
                0.5 * (r.state.v_z + p.state.v_z),
            ),
            None => (0.0, r.state.v_z),
        };
        let meas = Measurement {
            t: r.t,
            psi: r.state.psi,
            omega_z: r.somega_z,
            a_z,
            v_x: r.svx,
            v_y: r.svy,
            v_z,
        };
        let before = detector.status().is_healthy();
        let status = detector.update(&meas, &prev_cmd, psi_d)?;
        if before {
            out.extend(
                status
                    .failed()
                    .into_iter()
                    .map(|(rotor, t)| Detection { t, rotor }),
            );
        }
        prev_cmd = r.thrusts;
    }
    Ok(out)
}

/// Reads a trace and scans it with the detector and model of `scenario`.
pub fn fault_scan_reader<R: Read>(input: R, scenario: &Scenario) -> Result<Vec<Detection>> {
    let records = read_trace(input)?;
    fault_scan(
        &records,
        &scenario.fault,
        &scenario.params,
        scenario.setpoint.psi_d,
    )
}
