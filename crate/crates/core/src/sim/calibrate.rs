//! Reference vehicle numbers and the calibrations that produce them.
//!
//! Mass, rotor ceiling and geometry are measured quantities. Linear drag is
//! chosen so the axis-aligned terminal speed is 1.5 m/s, yaw damping so a
//! full-differential spin-up settles at 346 deg/s, and the wake-lift gain
//! so the noise-free altitude step recovers in about two seconds.

use crate::dynamics::{c_psi_from_geometry, AeroParams, GeometryConfig};
use crate::error::{Error, Result};
use crate::sim::harness::run_scenario;
use crate::sim::metrics::altitude_step_latency;
use crate::sim::scenario::Scenario;

/// Take-off mass of the reference build, kg.
pub const MASS_KG: f64 = 0.1262;
/// Per-rotor thrust ceiling, N.
pub const T_MAX_N: f64 = 0.154;
/// Distance between the rotor pairs, m.
pub const PAIR_SEPARATION_M: f64 = 0.08;
/// Angle between adjacent arms, rad.
pub const ARM_ANGLE: f64 = std::f64::consts::FRAC_PI_2;
/// Yaw inertia of the envelope plus gas, kg m^2. Estimated, not measured.
pub const YAW_INERTIA: f64 = 2.0e-3;
pub const AXIS_TERMINAL_SPEED: f64 = 1.5;
pub const YAW_CEILING_DEG_S: f64 = 346.0;

/// `C_d` that makes `2 t_max / (m C_d)` equal `speed`.
pub fn drag_for_axis_speed(speed: f64, m: f64, t_max: f64) -> f64 {
    2.0 * t_max / (m * speed)
}

pub fn axis_terminal_speed(p: &AeroParams) -> f64 {
    2.0 * p.t_max / (p.m * p.c_d)
}

/// `C_dpsi` that makes the full-differential steady yaw rate `omega_max` rad/s.
pub fn yaw_damping_for_ceiling(c_psi: f64, t_max: f64, omega_max: f64) -> f64 {
    c_psi * 2.0 * t_max / omega_max
}

pub fn steady_yaw_rate(p: &AeroParams) -> f64 {
    p.c_psi * 2.0 * p.t_max / p.c_dpsi
}

pub fn reference_c_psi() -> f64 {
    let g = GeometryConfig::new(PAIR_SEPARATION_M, ARM_ANGLE).expect("constant geometry");
    c_psi_from_geometry(&g, YAW_INERTIA).expect("constant inertia")
}

/// Reference parameters for a given wake-lift gain.
pub fn reference_params(c_z: f64) -> AeroParams {
    let c_psi = reference_c_psi();
    AeroParams {
        m: MASS_KG,
        c_d: drag_for_axis_speed(AXIS_TERMINAL_SPEED, MASS_KG, T_MAX_N),
        c_z,
        c_psi,
        c_dpsi: yaw_damping_for_ceiling(c_psi, T_MAX_N, YAW_CEILING_DEG_S.to_radians()),
        t_max: T_MAX_N,
    }
}

/// Bisects `aero.c_z` so the step scenario's recovery latency hits `target` s.
///
/// Latency falls as `C_z` grows, since more lift per newton squared means a
/// faster climb. `lo`/`hi` must bracket the target.
pub fn tune_c_z(step: &Scenario, target: f64, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let latency = |c_z: f64| -> Result<f64> {
        let s = step.with_override("aero.c_z", &c_z.to_string())?;
        altitude_step_latency(&s, &run_scenario(&s)?)
            .ok_or_else(|| Error::Domain(format!("step not recovered with c_z = {c_z}")))
    };
    let (f_lo, f_hi) = (latency(lo)?, latency(hi)?);
    if !(f_lo >= target && f_hi <= target) {
        return Err(Error::Domain(format!(
            "c_z bracket [{lo}, {hi}] gives latencies [{f_lo}, {f_hi}], target {target}"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if latency(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
