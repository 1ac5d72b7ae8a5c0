//! The integrate, sense, detect, control, log loop.

use nalgebra::Vector3;
use rand::Rng;

use crate::controller::{control_step, ControllerState, Setpoint};
use crate::dynamics::{derivative, step_rk4, wrap_angle, MotorThrusts, VehicleState};
use crate::error::{Error, Result};
use crate::fault::{ftc_allocate, Detector, FaultStatus, Measurement, Rotor};
use crate::sensors::{inject_spin, run_rng, Sensors, WindField};
use crate::sim::estimator::Estimator;
use crate::sim::scenario::{Scenario, ScenarioKind};
use crate::sim::trace::TraceRecord;

/// Any logged magnitude above this aborts the run.
pub const BLOW_UP_LIMIT: f64 = 1e6;

/// RNG stream for scenario-level draws (injection time and rotor).
pub const SCENARIO_STREAM: u64 = 3;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunEvents {
    pub injected: Option<(f64, Rotor)>,
    pub detected: Option<(f64, Rotor)>,
    pub spin_at: Option<f64>,
    pub waypoints_reached: Vec<f64>,
    pub battery_empty_at: Option<f64>,
    /// More than one rotor reported failed; motors were shut down.
    pub unrecoverable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub records: Vec<TraceRecord>,
    pub events: RunEvents,
}

#[derive(Debug, Clone, Copy)]
struct Injection {
    time: f64,
    rotor: Rotor,
}

fn draw_injection(s: &Scenario) -> Option<Injection> {
    let spec = s.injection?;
    let mut rng = run_rng(s.seed, SCENARIO_STREAM);
    let jitter = if spec.time_jitter > 0.0 {
        rng.random_range(0.0..spec.time_jitter)
    } else {
        0.0
    };
    let rotor = spec
        .rotor
        .unwrap_or_else(|| Rotor::ALL[rng.random_range(0..4usize)]);
    Some(Injection {
        time: spec.time + jitter,
        rotor,
    })
}

/// Setpoint in force at `t`, before any fault handling.
fn nominal_setpoint(s: &Scenario, t: f64, waypoint: usize) -> Setpoint {
    let mut sp = s.setpoint;
    if let Some(inj) = s.injection {
        if inj.climb_rate > 0.0 {
            let z = s.setpoint.z_d + inj.climb_rate * t;
            if z < inj.climb_ceiling {
                sp.z_d = z;
                sp.z_rate = inj.climb_rate;
            } else {
                sp.z_d = inj.climb_ceiling.max(s.setpoint.z_d);
            }
        }
    }
    if let Some(wp) = &s.waypoints {
        let p = wp.points[waypoint.min(wp.points.len() - 1)];
        sp.x_d = p[0];
        sp.y_d = p[1];
        sp.z_d = p[2];
    }
    sp
}

pub fn run_scenario(s: &Scenario) -> Result<RunResult> {
    let n = s.steps();
    let dt = s.dt;
    let p = s.params;
    let tethered = s.kind == ScenarioKind::LifetimeSweep;

    let mut state = s.initial;
    let mut sensors = Sensors::new(s.sensors, s.seed)?;
    let mut wind = WindField::new(s.wind, s.seed)?;
    let mut est = Estimator::new(
        s.estimator,
        VehicleState {
            z: s.initial.z - s.ground_height(0.0),
            ..s.initial
        },
    );
    let mut detector = Detector::new(s.fault, p);
    let mut cs = ControllerState::default();
    let injection = draw_injection(s);

    let mut events = RunEvents {
        injected: injection.map(|i| (i.time, i.rotor)),
        ..RunEvents::default()
    };
    let mut records = Vec::with_capacity(n + 1);
    let mut prev_cmd = MotorThrusts::ZERO;
    let mut prev_applied = MotorThrusts::ZERO;
    let mut battery = s.battery.capacity_mah;
    let mut waypoint = 0usize;
    let mut status = FaultStatus::default();
    let mut ftc_bearing: Option<f64> = None;

    for k in 0..=n {
        let t = k as f64 * dt;
        let w = wind.sample(t)?;
        let ground = s.ground_height(t);

        if let Some(spin) = s.spin {
            if events.spin_at.is_none() && t >= spin.time {
                state = inject_spin(&state, spin.rate);
                events.spin_at = Some(t);
            }
        }

        let accel = if tethered {
            Default::default()
        } else {
            derivative(&state, &prev_applied, &p, &w)?
        };
        let reading = sensors.sense(&state, &accel, t, ground)?;
        let e = est.update(&reading);

        let base_sp = nominal_setpoint(s, t, waypoint);
        if !tethered && k > 0 && status.is_healthy() {
            let meas = Measurement {
                t,
                psi: e.psi,
                omega_z: reading.omega_z,
                a_z: reading.accel.z,
                v_x: e.v_x,
                v_y: e.v_y,
                v_z: e.v_z,
            };
            status = detector.update(&meas, &prev_cmd, base_sp.psi_d)?;
            if let Some(&(rotor, at)) = status.failed().first() {
                events.detected = Some((at, rotor));
            }
        }

        let mut az_cmd = 0.0;
        let mut tau_cmd = 0.0;
        let mut ax_cmd = 0.0;
        let mut ay_cmd = 0.0;
        let cmd = if tethered {
            let duty = s.lifetime.map_or(0.0, |l| l.duty);
            MotorThrusts::from_array([duty * p.t_max; 4])
        } else if status.is_healthy() {
            let out = control_step(&e, &base_sp, &s.gains, &p, &mut cs, dt, &s.control)?;
            az_cmd = out.accel.a_z;
            tau_cmd = out.accel.tau_z;
            ax_cmd = out.accel.a_x;
            ay_cmd = out.accel.a_y;
            out.thrusts
        } else {
            let (rx, ry) = s.injection.map_or((s.setpoint.x_d, s.setpoint.y_d), |i| {
                (i.recovery_x, i.recovery_y)
            });
            let bearing = *ftc_bearing.get_or_insert_with(|| (ry - e.y).atan2(rx - e.x));
            let failed: Vec<Rotor> = status.failed().into_iter().map(|(r, _)| r).collect();
            // along-track PD on the line latched at isolation; the survivors
            // can only push forward, drag does the braking
            let (ub_s, ub_c) = bearing.sin_cos();
            let along = (rx - e.x) * ub_c + (ry - e.y) * ub_s;
            let v_along = e.v_x * ub_c + e.v_y * ub_s;
            let a_along = (s.gains.x.kp * along - s.gains.x.kd * v_along).max(0.0);
            let (ax, ay) = (a_along * ub_c, a_along * ub_s);
            ax_cmd = ax;
            ay_cmd = ay;
            match ftc_allocate(ub_c, ub_s, 0.0, &failed, p.t_max, s.fault.norm) {
                Ok(plan) => {
                    let heading_err = wrap_angle(e.psi - plan.heading_setpoint());
                    let tau = -s.gains.psi.kp * heading_err - s.gains.psi.kd * e.omega_z;
                    tau_cmd = tau;
                    let tau_n = tau / p.c_psi;
                    // yaw first: leave the survivors headroom for the torque,
                    // and only push once the push axis faces the target
                    let push = p.m * a_along;
                    let limit = (2.0 * p.t_max - tau_n.abs()).max(0.0);
                    let scale = if push > 0.0 {
                        (limit / push).min(1.0) * heading_err.cos().max(0.0)
                    } else {
                        0.0
                    };
                    let (fx, fy) = (p.m * ax * scale, p.m * ay * scale);
                    ftc_allocate(fx, fy, tau_n, &failed, p.t_max, s.fault.norm)?.thrusts
                }
                Err(Error::Unrecoverable(_)) => {
                    events.unrecoverable = true;
                    MotorThrusts::ZERO
                }
                Err(other) => return Err(other),
            }
        };

        let mut applied = cmd;
        if let Some(inj) = injection {
            if t >= inj.time {
                applied.set(inj.rotor.index(), 0.0);
            }
        }

        let heading_hold = match s.lifetime {
            Some(l) if tethered => l.heading_hold,
            _ => s.control.hold_heading,
        };
        let duty: f64 = applied.as_array().iter().map(|m| m / p.t_max).sum();
        let current = s.battery.i_idle
            + if heading_hold {
                s.battery.i_heading_overhead
            } else {
                0.0
            }
            + duty * s.battery.i_motor_full;
        let draw = current * dt / 3600.0;

        let record = TraceRecord {
            t,
            state,
            sz: e.z,
            svx: e.v_x,
            svy: e.v_y,
            somega_z: reading.omega_z,
            thrusts: cmd,
            az_cmd,
            tau_cmd,
            ax_cmd,
            ay_cmd,
            fault_status: status.label(),
            battery_mah: battery,
        };
        if let Some((field, value)) = record.check_bounds(BLOW_UP_LIMIT) {
            return Err(Error::Diverged {
                index: k,
                t,
                field,
                value,
            });
        }
        records.push(record);

        if events.battery_empty_at.is_none() && battery - draw <= 0.0 {
            events.battery_empty_at = Some(t + battery / current * 3600.0);
        }
        battery = (battery - draw).max(0.0);

        if let Some(wp) = &s.waypoints {
            if waypoint < wp.points.len() {
                let target = wp.points[waypoint];
                let d = Vector3::new(e.x - target[0], e.y - target[1], e.z - target[2]).norm();
                if d < wp.tolerance {
                    events.waypoints_reached.push(t);
                    waypoint += 1;
                }
            }
        }

        if k < n && !tethered {
            let mut next = step_rk4(&state, &applied, &p, &w, dt)?;
            let floor = s.ground_height(t + dt);
            if next.z < floor {
                next.z = floor;
                next.v_z = next.v_z.max(0.0);
            }
            state = next;
        }
        prev_cmd = cmd;
        prev_applied = applied;
    }

    Ok(RunResult { records, events })
}
