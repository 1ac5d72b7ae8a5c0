//! Scenario definitions built from a [`ConfigMap`].

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::Vector3;

use crate::controller::{AxisGains, ControlOptions, GainSet, Setpoint};
use crate::dynamics::{AeroParams, VehicleState};
use crate::energy::BatteryModel;
use crate::error::{Error, Result};
use crate::fault::{FaultConfig, LateralNorm, Rotor};
use crate::sensors::{SensorSuite, WindModel};
use crate::sim::config::{ConfigMap, Reader};
use crate::sim::estimator::EstimatorGains;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    Hover,
    AltitudeStep,
    YawDisturbance,
    Waypoint,
    FaultInjection,
    WindGust,
    LifetimeSweep,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 7] = [
        ScenarioKind::Hover,
        ScenarioKind::AltitudeStep,
        ScenarioKind::YawDisturbance,
        ScenarioKind::Waypoint,
        ScenarioKind::FaultInjection,
        ScenarioKind::WindGust,
        ScenarioKind::LifetimeSweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Hover => "hover",
            ScenarioKind::AltitudeStep => "altitude_step",
            ScenarioKind::YawDisturbance => "yaw_disturbance",
            ScenarioKind::Waypoint => "waypoint",
            ScenarioKind::FaultInjection => "fault_injection",
            ScenarioKind::WindGust => "wind_gust",
            ScenarioKind::LifetimeSweep => "lifetime_sweep",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::ConfigKey(format!("unknown scenario type `{s}`")))
    }
}

/// Ground below the vehicle rises (or drops) at `time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSpec {
    pub time: f64,
    pub ground_height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinSpec {
    pub time: f64,
    /// rad/s
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaypointSpec {
    pub points: Vec<[f64; 3]>,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InjectionSpec {
    pub time: f64,
    /// `None` picks a rotor from the run seed.
    pub rotor: Option<Rotor>,
    /// Injection time is drawn uniformly from `[time, time + jitter]`.
    pub time_jitter: f64,
    /// Setpoint climb rate before the fault, m/s. Keeps the rotors loaded.
    pub climb_rate: f64,
    pub climb_ceiling: f64,
    pub recovery_x: f64,
    pub recovery_y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifetimeSpec {
    pub duty: f64,
    pub heading_hold: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub dt: f64,
    pub duration: f64,
    pub seed: u64,
    pub params: AeroParams,
    pub gains: GainSet,
    pub control: ControlOptions,
    pub fault: FaultConfig,
    pub sensors: SensorSuite,
    pub estimator: EstimatorGains,
    pub wind: WindModel,
    pub battery: BatteryModel,
    pub setpoint: Setpoint,
    pub initial: VehicleState,
    pub step: Option<StepSpec>,
    pub spin: Option<SpinSpec>,
    pub waypoints: Option<WaypointSpec>,
    pub injection: Option<InjectionSpec>,
    pub lifetime: Option<LifetimeSpec>,
    source: ConfigMap,
}

/// Detection defaults used when a scenario leaves `fault.*` out.
pub fn default_fault_config() -> FaultConfig {
    FaultConfig {
        k_omega_z: 0.1,
        k_a_z: 0.05,
        window: 1.25,
        v_residual_eps: 0.005,
        psi_eps: 0.02,
        norm: LateralNorm::Euclidean,
    }
}

fn axis(r: &Reader, name: &str) -> Result<AxisGains> {
    Ok(AxisGains {
        kp: r.req(&format!("gains.{name}.kp"))?,
        kd: r.req(&format!("gains.{name}.kd"))?,
        ki: r.req(&format!("gains.{name}.ki"))?,
    })
}

fn parse_waypoints(text: &str, line: usize) -> Result<Vec<[f64; 3]>> {
    text.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|p| {
            let v: Vec<f64> = p
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Config {
                    line,
                    message: format!("bad waypoint `{p}`"),
                })?;
            match v.as_slice() {
                [x, y, z] if v.iter().all(|c| c.is_finite()) => Ok([*x, *y, *z]),
                _ => Err(Error::Config {
                    line,
                    message: format!("waypoint `{p}` needs x,y,z"),
                }),
            }
        })
        .collect()
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(text: &str) -> Result<Self> {
        Scenario::from_config(text.parse()?)
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        Scenario::from_config(ConfigMap::load(path)?)
    }

    pub fn config(&self) -> &ConfigMap {
        &self.source
    }

    /// Copy with one key replaced, re-validated.
    pub fn with_override(&self, key: &str, value: &str) -> Result<Scenario> {
        let mut map = self.source.clone();
        map.set(key, value);
        Scenario::from_config(map)
    }

    pub fn from_config(map: ConfigMap) -> Result<Self> {
        let r = Reader::new(&map);
        let kind: ScenarioKind = r.req("scenario.type")?;
        let dt: f64 = r.or("scenario.dt", crate::dynamics::DEFAULT_DT)?;
        let duration: f64 = r.req("scenario.duration")?;
        let seed: u64 = r.or("scenario.seed", 0)?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::ConfigKey(format!(
                "scenario.dt must be > 0, got {dt}"
            )));
        }
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::ConfigKey(format!(
                "scenario.duration must be > 0, got {duration}"
            )));
        }

        let params = AeroParams {
            m: r.req("aero.m")?,
            c_d: r.req("aero.c_d")?,
            c_z: r.req("aero.c_z")?,
            c_psi: r.req("aero.c_psi")?,
            c_dpsi: r.req("aero.c_dpsi")?,
            t_max: r.req("aero.t_max")?,
        };
        params.validate()?;

        let gains = GainSet {
            z: axis(&r, "z")?,
            psi: axis(&r, "psi")?,
            x: axis(&r, "x")?,
            y: axis(&r, "y")?,
            integral_clamp: r.req("gains.integral_clamp")?,
        };
        gains.validate()?;

        let d = ControlOptions::default();
        let control = ControlOptions {
            newton_tol: r.or("control.newton_tol", d.newton_tol)?,
            newton_max_iter: r.or("control.newton_max_iter", d.newton_max_iter)?,
            lateral_floor: r.flag("control.lateral_floor", d.lateral_floor)?,
            hold_heading: r.flag("control.hold_heading", d.hold_heading)?,
        };

        let fd = default_fault_config();
        let fault = FaultConfig {
            k_omega_z: r.or("fault.k_omega_z", fd.k_omega_z)?,
            k_a_z: r.or("fault.k_a_z", fd.k_a_z)?,
            window: r.or("fault.window", fd.window)?,
            v_residual_eps: r.or("fault.v_residual_eps", fd.v_residual_eps)?,
            psi_eps: r.or("fault.psi_eps", fd.psi_eps)?,
            norm: r.or("fault.norm", fd.norm)?,
        };
        fault.validate()?;

        let sd = SensorSuite::default();
        let sensors = SensorSuite {
            imu_rate: r.or("sensors.imu_rate", sd.imu_rate)?,
            imu_accel_sigma: r.or("sensors.imu_accel_sigma", sd.imu_accel_sigma)?,
            imu_gyro_sigma: r.or("sensors.imu_gyro_sigma", sd.imu_gyro_sigma)?,
            imu_gyro_bias: r.or("sensors.imu_gyro_bias", sd.imu_gyro_bias)?,
            tof_rate: r.or("sensors.tof_rate", sd.tof_rate)?,
            tof_sigma: r.or("sensors.tof_sigma", sd.tof_sigma)?,
            tof_max_range: r.or("sensors.tof_max_range", sd.tof_max_range)?,
            flow_rate: r.or("sensors.flow_rate", sd.flow_rate)?,
            flow_sigma: r.or("sensors.flow_sigma", sd.flow_sigma)?,
        };
        sensors.validate()?;

        let ed = EstimatorGains::default();
        let estimator = EstimatorGains {
            alpha: r.or("estimator.alpha", ed.alpha)?,
            beta: r.or("estimator.beta", ed.beta)?,
            gate: r.or("estimator.gate", ed.gate)?,
        };
        estimator.validate()?;

        let wind = WindModel {
            mean: Vector3::new(
                r.or("wind.mean_x", 0.0)?,
                r.or("wind.mean_y", 0.0)?,
                r.or("wind.mean_z", 0.0)?,
            ),
            gust_amplitude: r.or("wind.gust_amplitude", 0.0)?,
            gust_heading: r.or::<f64>("wind.gust_heading_deg", 0.0)?.to_radians(),
            gust_start: r.or("wind.gust_start", 0.0)?,
            gust_duration: r.or("wind.gust_duration", 0.0)?,
            noise_sigma: r.or("wind.noise_sigma", 0.0)?,
            noise_tau: r.or("wind.noise_tau", 0.0)?,
        };
        wind.validate()?;

        let bd = BatteryModel::fitted();
        let battery = BatteryModel {
            capacity_mah: r.or("battery.capacity_mah", bd.capacity_mah)?,
            voltage: r.or("battery.voltage", bd.voltage)?,
            i_idle: r.or("battery.i_idle", bd.i_idle)?,
            i_motor_full: r.or("battery.i_motor_full", bd.i_motor_full)?,
            i_heading_overhead: r.or("battery.i_heading_overhead", bd.i_heading_overhead)?,
        };
        battery.validate()?;

        let setpoint = Setpoint::hold(
            r.or("setpoint.x", 0.0)?,
            r.or("setpoint.y", 0.0)?,
            r.req("setpoint.z")?,
            r.or::<f64>("setpoint.psi_deg", 0.0)?.to_radians(),
        );
        let initial = VehicleState {
            x: r.or("initial.x", setpoint.x_d)?,
            y: r.or("initial.y", setpoint.y_d)?,
            z: r.or("initial.z", setpoint.z_d)?,
            v_x: r.or("initial.vx", 0.0)?,
            v_y: r.or("initial.vy", 0.0)?,
            v_z: r.or("initial.vz", 0.0)?,
            psi: crate::dynamics::wrap_angle(
                r.or::<f64>("initial.psi_deg", setpoint.psi_d.to_degrees())?
                    .to_radians(),
            ),
            omega_z: r.or::<f64>("initial.omega_z_deg", 0.0)?.to_radians(),
        };
        crate::error::ensure_finite("initial state", &initial.as_array())?;

        let need = |key: &str, this: ScenarioKind| -> Result<()> {
            if kind == this && !r.has(key) {
                return Err(Error::ConfigKey(format!(
                    "missing key `{key}` for {kind} scenario"
                )));
            }
            Ok(())
        };

        need("step.time", ScenarioKind::AltitudeStep)?;
        need("step.ground_height", ScenarioKind::AltitudeStep)?;
        let step = match (
            r.opt::<f64>("step.time")?,
            r.opt::<f64>("step.ground_height")?,
        ) {
            (Some(time), Some(ground_height)) => Some(StepSpec {
                time,
                ground_height,
            }),
            (None, None) => None,
            _ => {
                return Err(Error::ConfigKey(
                    "step.time and step.ground_height go together".into(),
                ))
            }
        };

        need("spin.time", ScenarioKind::YawDisturbance)?;
        need("spin.rate_deg", ScenarioKind::YawDisturbance)?;
        let spin = match (r.opt::<f64>("spin.time")?, r.opt::<f64>("spin.rate_deg")?) {
            (Some(time), Some(rate)) => Some(SpinSpec {
                time,
                rate: rate.to_radians(),
            }),
            (None, None) => None,
            _ => {
                return Err(Error::ConfigKey(
                    "spin.time and spin.rate_deg go together".into(),
                ))
            }
        };

        need("waypoint.list", ScenarioKind::Waypoint)?;
        let waypoints = match r.text("waypoint.list") {
            Some((text, line)) => {
                let points = parse_waypoints(text, line)?;
                if points.is_empty() {
                    return Err(Error::Config {
                        line,
                        message: "waypoint.list is empty".into(),
                    });
                }
                let tolerance: f64 = r.or("waypoint.tolerance", 0.1)?;
                if !(tolerance > 0.0) {
                    return Err(Error::ConfigKey("waypoint.tolerance must be > 0".into()));
                }
                Some(WaypointSpec { points, tolerance })
            }
            None => {
                r.opt::<f64>("waypoint.tolerance")?;
                None
            }
        };

        need("injection.time", ScenarioKind::FaultInjection)?;
        need("injection.rotor", ScenarioKind::FaultInjection)?;
        let injection = match r.opt::<f64>("injection.time")? {
            Some(time) => {
                let rotor = match r.text("injection.rotor") {
                    Some(("any", _)) => None,
                    Some((v, line)) => Some(
                        v.parse::<usize>()
                            .ok()
                            .and_then(|i| Rotor::from_index(i).ok())
                            .ok_or_else(|| Error::Config {
                                line,
                                message: format!(
                                    "injection.rotor must be 1..4 or `any`, got `{v}`"
                                ),
                            })?,
                    ),
                    None => return Err(Error::ConfigKey("missing key `injection.rotor`".into())),
                };
                let spec = InjectionSpec {
                    time,
                    rotor,
                    time_jitter: r.or("injection.time_jitter", 0.0)?,
                    climb_rate: r.or("injection.climb_rate", 0.0)?,
                    climb_ceiling: r.or("injection.climb_ceiling", 3.5)?,
                    recovery_x: r.or("recovery.x", setpoint.x_d)?,
                    recovery_y: r.or("recovery.y", setpoint.y_d)?,
                };
                if !(spec.time >= 0.0 && spec.time_jitter >= 0.0 && spec.climb_rate >= 0.0) {
                    return Err(Error::ConfigKey(
                        "injection.time, time_jitter and climb_rate must be >= 0".into(),
                    ));
                }
                Some(spec)
            }
            None => None,
        };

        need("lifetime.duty", ScenarioKind::LifetimeSweep)?;
        let lifetime = match r.opt::<f64>("lifetime.duty")? {
            Some(duty) => {
                if !(0.0..=1.0).contains(&duty) {
                    return Err(Error::ConfigKey(format!(
                        "lifetime.duty {duty} outside [0, 1]"
                    )));
                }
                Some(LifetimeSpec {
                    duty,
                    heading_hold: r.flag("lifetime.heading", false)?,
                })
            }
            None => None,
        };

        r.finish()?;
        Ok(Scenario {
            kind,
            dt,
            duration,
            seed,
            params,
            gains,
            control,
            fault,
            sensors,
            estimator,
            wind,
            battery,
            setpoint,
            initial,
            step,
            spin,
            waypoints,
            injection,
            lifetime,
            source: map,
        })
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    /// Ground height below the vehicle at `t`.
    pub fn ground_height(&self, t: f64) -> f64 {
        match self.step {
            Some(s) if t >= s.time => s.ground_height,
            _ => 0.0,
        }
    }
}
