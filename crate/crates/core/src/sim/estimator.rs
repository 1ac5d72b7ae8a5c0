//! State estimate from the sensor suite.
//!
//! Heading integrates the gyro (trapezoid). Lateral velocity is optic flow
//! rotated into the world frame, position its integral. Height above ground
//! is an alpha-beta filter on the ToF, predicted with the IMU between
//! samples. A ToF innovation larger than `gate` is read as a change in the
//! ground below: the height is re-seated and the velocity left alone.

use crate::dynamics::{wrap_angle, VehicleState};
use crate::error::{Error, Result};
use crate::sensors::SensorReading;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorGains {
    pub alpha: f64,
    pub beta: f64,
    /// m
    pub gate: f64,
}

impl Default for EstimatorGains {
    fn default() -> Self {
        Self {
            alpha: 0.3,
            beta: 0.05,
            gate: 0.25,
        }
    }
}

impl EstimatorGains {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::ConfigKey(format!(
                "estimator.alpha must be in (0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.beta >= 0.0 && self.beta < 2.0) {
            return Err(Error::ConfigKey(format!(
                "estimator.beta must be in [0, 2), got {}",
                self.beta
            )));
        }
        if !(self.gate > 0.0) {
            return Err(Error::ConfigKey(format!(
                "estimator.gate must be > 0, got {}",
                self.gate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Estimator {
    gains: EstimatorGains,
    est: VehicleState,
    last: Option<SensorReading>,
    last_tof_t: f64,
}

impl Estimator {
    /// `initial` is the known start pose; `z` is height above ground.
    pub fn new(gains: EstimatorGains, initial: VehicleState) -> Self {
        Self {
            gains,
            est: initial,
            last: None,
            last_tof_t: 0.0,
        }
    }

    pub fn state(&self) -> VehicleState {
        self.est
    }

    pub fn update(&mut self, r: &SensorReading) -> VehicleState {
        let Some(prev) = self.last.replace(*r) else {
            self.est.omega_z = r.omega_z;
            let (s, c) = self.est.psi.sin_cos();
            self.est.v_x = c * r.v_x - s * r.v_y;
            self.est.v_y = s * r.v_x + c * r.v_y;
            if let Some(z) = r.z_range {
                self.est.z = z;
            }
            self.last_tof_t = r.t;
            return self.est;
        };
        let dt = r.t - prev.t;

        let e = &mut self.est;
        e.psi = wrap_angle(e.psi + 0.5 * dt * (prev.omega_z + r.omega_z));
        e.omega_z = r.omega_z;

        let (s, c) = e.psi.sin_cos();
        let (vx, vy) = (c * r.v_x - s * r.v_y, s * r.v_x + c * r.v_y);
        e.x += 0.5 * dt * (e.v_x + vx);
        e.y += 0.5 * dt * (e.v_y + vy);
        e.v_x = vx;
        e.v_y = vy;

        let a = 0.5 * (prev.accel.z + r.accel.z);
        e.z += e.v_z * dt + 0.5 * a * dt * dt;
        e.v_z += a * dt;

        if r.tof_fresh {
            if let Some(range) = r.z_range {
                let innovation = range - e.z;
                if innovation.abs() > self.gains.gate {
                    e.z = range;
                } else {
                    let h = (r.t - self.last_tof_t).max(dt);
                    e.z += self.gains.alpha * innovation;
                    e.v_z += self.gains.beta * innovation / h;
                }
            }
            self.last_tof_t = r.t;
        }
        self.est
    }
}
