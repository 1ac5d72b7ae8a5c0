//! Headline metric of each scenario type.

use crate::dynamics::wrap_angle;
use crate::sim::harness::RunResult;
use crate::sim::scenario::{Scenario, ScenarioKind};

#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    /// `None` when the event the metric times never happened.
    pub value: Option<f64>,
    pub detail: String,
}

/// Relative band for the altitude-step recovery.
pub const STEP_BAND: f64 = 0.05;
/// Heading band for yaw recovery, rad.
pub const YAW_BAND: f64 = 5.0 * std::f64::consts::PI / 180.0;

/// Time after `start` from which `inside` holds for every later record.
pub fn settle_time<F: Fn(usize) -> bool>(run: &RunResult, start: f64, inside: F) -> Option<f64> {
    let recs = &run.records;
    let first = recs.iter().position(|r| r.t >= start)?;
    if !inside(recs.len() - 1) {
        return None;
    }
    let last_out = (first..recs.len()).rev().find(|&i| !inside(i));
    Some(match last_out {
        Some(i) => recs[i + 1].t - start,
        None => 0.0,
    })
}

pub fn altitude_step_latency(s: &Scenario, run: &RunResult) -> Option<f64> {
    let step = s.step?;
    let z_d = s.setpoint.z_d;
    settle_time(run, step.time, |i| {
        let r = &run.records[i];
        let sep = r.state.z - s.ground_height(r.t);
        (sep - z_d).abs() <= STEP_BAND * z_d
    })
}

pub fn yaw_recovery_time(s: &Scenario, run: &RunResult) -> Option<f64> {
    let start = run.events.spin_at?;
    settle_time(run, start, |i| {
        wrap_angle(run.records[i].state.psi - s.setpoint.psi_d).abs() <= YAW_BAND
    })
}

pub fn headline(s: &Scenario, run: &RunResult) -> Metric {
    let recs = &run.records;
    match s.kind {
        ScenarioKind::Hover => Metric {
            value: Some(
                recs.iter()
                    .map(|r| (r.state.z - s.ground_height(r.t) - s.setpoint.z_d).abs())
                    .fold(0.0, f64::max),
            ),
            detail: "max altitude error m".into(),
        },
        ScenarioKind::AltitudeStep => {
            let v = altitude_step_latency(s, run);
            Metric {
                value: v,
                detail: if v.is_some() {
                    "recovery s"
                } else {
                    "not recovered"
                }
                .into(),
            }
        }
        ScenarioKind::YawDisturbance => {
            let v = yaw_recovery_time(s, run);
            Metric {
                value: v,
                detail: if v.is_some() {
                    "yaw recovery s"
                } else {
                    "not recovered"
                }
                .into(),
            }
        }
        ScenarioKind::Waypoint => {
            let total = s.waypoints.as_ref().map_or(0, |w| w.points.len());
            let reached = run.events.waypoints_reached.len();
            Metric {
                value: (reached == total).then(|| run.events.waypoints_reached[total - 1]),
                detail: format!("reached {reached}/{total}"),
            }
        }
        ScenarioKind::FaultInjection => match (run.events.injected, run.events.detected) {
            (Some((ti, ri)), Some((td, rd))) => Metric {
                value: Some(td - ti),
                detail: format!(
                    "injected={ri} detected={rd} {}",
                    if ri == rd { "correct" } else { "wrong" }
                ),
            },
            (Some((_, ri)), None) => Metric {
                value: None,
                detail: format!("injected={ri} missed"),
            },
            _ => Metric {
                value: None,
                detail: "no injection".into(),
            },
        },
        ScenarioKind::WindGust => Metric {
            value: Some(
                recs.iter()
                    .map(|r| (r.state.x - s.setpoint.x_d).hypot(r.state.y - s.setpoint.y_d))
                    .fold(0.0, f64::max),
            ),
            detail: "max lateral deviation m".into(),
        },
        ScenarioKind::LifetimeSweep => Metric {
            value: run.events.battery_empty_at.map(|t| t / 60.0),
            detail: if run.events.battery_empty_at.is_some() {
                "minutes to empty"
            } else {
                "battery not exhausted"
            }
            .into(),
        },
    }
}

/// Post-isolation behaviour of a fault run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FtcCheck {
    pub isolated_at: f64,
    /// Largest vertical speed after isolation, m/s.
    pub max_climb_rate: f64,
    /// First time the push axis is within `heading_tol` of the bearing to the
    /// recovery point taken at isolation.
    pub transient_end: Option<f64>,
    /// Distance to the recovery point never grows between `transient_end`
    /// and capture.
    pub lateral_monotone: bool,
    pub final_distance: f64,
}

pub fn ftc_check(
    s: &Scenario,
    run: &RunResult,
    heading_tol: f64,
    capture_radius: f64,
) -> Option<FtcCheck> {
    let (isolated_at, rotor) = run.events.detected?;
    let inj = s.injection?;
    let push = crate::fault::ftc_layout(rotor).3;
    let after: Vec<_> = run.records.iter().filter(|r| r.t > isolated_at).collect();
    let dist = |r: &crate::sim::trace::TraceRecord| {
        (r.state.x - inj.recovery_x).hypot(r.state.y - inj.recovery_y)
    };
    let max_climb_rate = after
        .iter()
        .map(|r| r.state.v_z)
        .fold(f64::NEG_INFINITY, f64::max);
    // the guidance line is latched where the rotor was isolated
    let origin = run.records.iter().find(|r| r.t >= isolated_at)?;
    let bearing = (inj.recovery_y - origin.state.y).atan2(inj.recovery_x - origin.state.x);
    let transient_end = after
        .iter()
        .find(|r| wrap_angle(r.state.psi + push - bearing).abs() < heading_tol)
        .map(|r| r.t);
    let mut lateral_monotone = transient_end.is_some();
    if let Some(t0) = transient_end {
        let mut prev = f64::INFINITY;
        for r in after.iter().filter(|r| r.t >= t0) {
            let d = dist(r);
            if d < capture_radius {
                break;
            }
            if d > prev + 1e-9 {
                lateral_monotone = false;
                break;
            }
            prev = d;
        }
    }
    Some(FtcCheck {
        isolated_at,
        max_climb_rate,
        transient_end,
        lateral_monotone,
        final_distance: after.last().map_or(f64::NAN, |r| dist(r)),
    })
}
