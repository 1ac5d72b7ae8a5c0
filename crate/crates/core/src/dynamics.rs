//! Translational and yaw dynamics of the balloon-supported quadrotor.
//!
//! The vehicle is neutrally buoyant, so gravity never appears. Lateral
//! thrust acts in the body frame and is rotated into the world frame by the
//! yaw angle; at `psi = 0` the two frames coincide. Vertical acceleration
//! comes only from the wake interaction between the two diagonal rotor
//! pairs, `C_z (q1 q2 - (q1 - q2)^2)`.

use std::f64::consts::PI;

use nalgebra::Vector3;

use crate::error::{ensure_finite, Error, Result};

/// Integrator step used by every shipped scenario, in seconds.
pub const DEFAULT_DT: f64 = 0.005;

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let r = (angle + PI).rem_euclid(2.0 * PI) - PI;
    if r <= -PI {
        PI
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub v_x: f64,
    pub v_y: f64,
    pub v_z: f64,
    /// Yaw, radians, kept in `(-pi, pi]`.
    pub psi: f64,
    pub omega_z: f64,
}

impl VehicleState {
    pub fn at_rest(x: f64, y: f64, z: f64, psi: f64) -> Self {
        Self {
            x,
            y,
            z,
            psi: wrap_angle(psi),
            ..Self::default()
        }
    }

    pub fn as_array(&self) -> [f64; 8] {
        [
            self.x,
            self.y,
            self.z,
            self.v_x,
            self.v_y,
            self.v_z,
            self.psi,
            self.omega_z,
        ]
    }

    pub fn from_array(a: [f64; 8]) -> Self {
        Self {
            x: a[0],
            y: a[1],
            z: a[2],
            v_x: a[3],
            v_y: a[4],
            v_z: a[5],
            psi: a[6],
            omega_z: a[7],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }

    pub fn velocity(&self) -> Vector3<f64> {
        Vector3::new(self.v_x, self.v_y, self.v_z)
    }
}

/// Per-rotor thrust, newtons. Rotors 1 and 3 form the first diagonal pair,
/// rotors 2 and 4 the second.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MotorThrusts {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
}

impl MotorThrusts {
    pub const ZERO: MotorThrusts = MotorThrusts {
        m1: 0.0,
        m2: 0.0,
        m3: 0.0,
        m4: 0.0,
    };

    pub fn new(m1: f64, m2: f64, m3: f64, m4: f64) -> Result<Self> {
        let t = Self { m1, m2, m3, m4 };
        t.check()?;
        Ok(t)
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self {
            m1: a[0],
            m2: a[1],
            m3: a[2],
            m4: a[3],
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.m1, self.m2, self.m3, self.m4]
    }

    /// First pair sum, `m1 + m3`.
    pub fn q1(&self) -> f64 {
        self.m1 + self.m3
    }

    /// Second pair sum, `m2 + m4`.
    pub fn q2(&self) -> f64 {
        self.m2 + self.m4
    }

    pub fn total(&self) -> f64 {
        self.m1 + self.m2 + self.m3 + self.m4
    }

    /// Rotor `index` in `1..=4`.
    pub fn get(&self, index: usize) -> f64 {
        self.as_array()[index - 1]
    }

    pub fn set(&mut self, index: usize, value: f64) {
        match index {
            1 => self.m1 = value,
            2 => self.m2 = value,
            3 => self.m3 = value,
            4 => self.m4 = value,
            _ => panic!("rotor index {index} out of range"),
        }
    }

    /// Clamps every rotor to `[0, t_max]`. Returns true if any rotor was clipped.
    pub fn saturate(&mut self, t_max: f64) -> bool {
        let mut clipped = false;
        for i in 1..=4 {
            let v = self.get(i);
            let c = v.clamp(0.0, t_max);
            if c != v {
                clipped = true;
            }
            self.set(i, c);
        }
        clipped
    }

    fn check(&self) -> Result<()> {
        ensure_finite("motor thrusts", &self.as_array())?;
        if self.as_array().iter().any(|&m| m < 0.0) {
            return Err(Error::Domain(format!(
                "motor thrusts must be non-negative, got {:?}",
                self.as_array()
            )));
        }
        Ok(())
    }

    /// Lateral body-frame thrust `(M3+M4-M1-M2, M3+M2-M1-M4)`, newtons.
    pub fn body_force(&self) -> (f64, f64) {
        (
            self.m3 + self.m4 - self.m1 - self.m2,
            self.m3 + self.m2 - self.m1 - self.m4,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AeroParams {
    /// Total mass, kg.
    pub m: f64,
    /// Linear drag, 1/s.
    pub c_d: f64,
    /// Wake-interaction lift gain, m/s^2 per N^2.
    pub c_z: f64,
    /// Yaw acceleration per newton of pair imbalance, rad/s^2 per N.
    pub c_psi: f64,
    /// Yaw rate damping, 1/s. Zero reproduces the undamped model.
    pub c_dpsi: f64,
    /// Per-rotor thrust ceiling, N.
    pub t_max: f64,
}

impl AeroParams {
    pub fn validate(&self) -> Result<()> {
        let checks: [(&'static str, f64, bool); 6] = [
            ("m", self.m, self.m > 0.0),
            ("c_d", self.c_d, self.c_d >= 0.0),
            ("c_z", self.c_z, self.c_z > 0.0),
            ("c_psi", self.c_psi, self.c_psi > 0.0),
            ("c_dpsi", self.c_dpsi, self.c_dpsi >= 0.0),
            ("t_max", self.t_max, self.t_max > 0.0),
        ];
        for (name, value, ok) in checks {
            if !value.is_finite() || !ok {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("value {value} violates its bound"),
                });
            }
        }
        Ok(())
    }

    /// `F1`: pair sums to (vertical acceleration, yaw torque) at rest.
    pub fn f1(&self, q1: f64, q2: f64) -> (f64, f64) {
        let diff = q1 - q2;
        (self.c_z * (q1 * q2 - diff * diff), self.c_psi * diff)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryConfig {
    /// Distance between the two motor pairs, m.
    pub d_separation: f64,
    /// Angle between adjacent motor arms, rad.
    pub alpha: f64,
}

impl GeometryConfig {
    pub fn new(d_separation: f64, alpha: f64) -> Result<Self> {
        if !(d_separation > 0.0 && d_separation.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "d_separation",
                reason: format!("{d_separation} must be > 0"),
            });
        }
        if !(alpha > 0.0 && alpha < PI) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: format!("{alpha} must lie in (0, pi)"),
            });
        }
        Ok(Self {
            d_separation,
            alpha,
        })
    }
}

/// Yaw moment arm per unit thrust, `d_separation * sin(alpha / 2)`, meters.
pub fn yaw_coefficient(geometry: &GeometryConfig) -> f64 {
    geometry.d_separation * (geometry.alpha / 2.0).sin()
}

/// `C_psi` for a given yaw moment of inertia (kg m^2).
pub fn c_psi_from_geometry(geometry: &GeometryConfig, yaw_inertia: f64) -> Result<f64> {
    if !(yaw_inertia > 0.0 && yaw_inertia.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "yaw_inertia",
            reason: format!("{yaw_inertia} must be > 0"),
        });
    }
    Ok(yaw_coefficient(geometry) / yaw_inertia)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateDerivative {
    pub x_dot: f64,
    pub y_dot: f64,
    pub z_dot: f64,
    pub a_x: f64,
    pub a_y: f64,
    pub a_z: f64,
    pub psi_dot: f64,
    pub omega_dot: f64,
}

impl StateDerivative {
    pub fn as_array(&self) -> [f64; 8] {
        [
            self.x_dot,
            self.y_dot,
            self.z_dot,
            self.a_x,
            self.a_y,
            self.a_z,
            self.psi_dot,
            self.omega_dot,
        ]
    }

    pub fn accel(&self) -> Vector3<f64> {
        Vector3::new(self.a_x, self.a_y, self.a_z)
    }
}

pub fn derivative(
    state: &VehicleState,
    thrusts: &MotorThrusts,
    params: &AeroParams,
    wind: &Vector3<f64>,
) -> Result<StateDerivative> {
    ensure_finite("state", &state.as_array())?;
    ensure_finite("wind", wind.as_slice())?;
    thrusts.check()?;
    Ok(derivative_unchecked(state, thrusts, params, wind))
}

#[inline]
fn derivative_unchecked(
    state: &VehicleState,
    thrusts: &MotorThrusts,
    params: &AeroParams,
    wind: &Vector3<f64>,
) -> StateDerivative {
    let (fx, fy) = thrusts.body_force();
    let (s, c) = state.psi.sin_cos();
    let (q1, q2) = (thrusts.q1(), thrusts.q2());
    let (lift, torque) = params.f1(q1, q2);
    StateDerivative {
        x_dot: state.v_x,
        y_dot: state.v_y,
        z_dot: state.v_z,
        a_x: (c * fx - s * fy) / params.m - params.c_d * (state.v_x - wind.x),
        a_y: (s * fx + c * fy) / params.m - params.c_d * (state.v_y - wind.y),
        a_z: lift - params.c_d * (state.v_z - wind.z),
        psi_dot: state.omega_z,
        omega_dot: torque - params.c_dpsi * state.omega_z,
    }
}

fn offset(state: &VehicleState, d: &StateDerivative, h: f64) -> VehicleState {
    let mut a = state.as_array();
    for (v, dv) in a.iter_mut().zip(d.as_array()) {
        *v += h * dv;
    }
    VehicleState::from_array(a)
}

/// One classical Runge-Kutta step with thrusts and wind held over `dt`.
pub fn step_rk4(
    state: &VehicleState,
    thrusts: &MotorThrusts,
    params: &AeroParams,
    wind: &Vector3<f64>,
    dt: f64,
) -> Result<VehicleState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("dt must be > 0, got {dt}")));
    }
    let k1 = derivative(state, thrusts, params, wind)?;
    let k2 = derivative_unchecked(&offset(state, &k1, dt / 2.0), thrusts, params, wind);
    let k3 = derivative_unchecked(&offset(state, &k2, dt / 2.0), thrusts, params, wind);
    let k4 = derivative_unchecked(&offset(state, &k3, dt), thrusts, params, wind);

    let mut a = state.as_array();
    let (d1, d2, d3, d4) = (k1.as_array(), k2.as_array(), k3.as_array(), k4.as_array());
    for i in 0..8 {
        a[i] += dt / 6.0 * (d1[i] + 2.0 * d2[i] + 2.0 * d3[i] + d4[i]);
    }
    let mut next = VehicleState::from_array(a);
    next.psi = wrap_angle(next.psi);
    if !next.is_finite() {
        return Err(Error::NonFinite("integrated state"));
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_params() -> AeroParams {
        AeroParams {
            m: 1.0,
            c_d: 0.0,
            c_z: 1.0,
            c_psi: 1.0,
            c_dpsi: 0.0,
            t_max: 10.0,
        }
    }

    #[test]
    fn rest_with_no_thrust_is_equilibrium() {
        let d = derivative(
            &VehicleState::default(),
            &MotorThrusts::ZERO,
            &unit_params(),
            &Vector3::zeros(),
        )
        .unwrap();
        assert_eq!(d.as_array(), [0.0; 8]);
    }

    #[test]
    fn equal_thrusts_rise_without_lateral_or_yaw() {
        let t = 0.7;
        let p = unit_params();
        let d = derivative(
            &VehicleState::default(),
            &MotorThrusts::new(t, t, t, t).unwrap(),
            &p,
            &Vector3::zeros(),
        )
        .unwrap();
        assert_eq!(d.a_x, 0.0);
        assert_eq!(d.a_y, 0.0);
        assert_eq!(d.omega_dot, 0.0);
        assert_relative_eq!(d.a_z, p.c_z * (2.0 * t) * (2.0 * t), epsilon = 1e-15);
        assert!(d.a_z > 0.0);
    }

    #[test]
    fn hand_computed_derivative() {
        let d = derivative(
            &VehicleState::default(),
            &MotorThrusts::new(1.0, 0.0, 2.0, 0.0).unwrap(),
            &unit_params(),
            &Vector3::zeros(),
        )
        .unwrap();
        assert_eq!((d.a_x, d.a_y, d.a_z, d.omega_dot), (1.0, 1.0, -9.0, 3.0));
    }

    #[test]
    fn rejects_non_finite_and_negative_inputs() {
        let p = unit_params();
        let mut s = VehicleState::default();
        s.v_x = f64::NAN;
        assert!(derivative(&s, &MotorThrusts::ZERO, &p, &Vector3::zeros()).is_err());
        let w = Vector3::new(f64::INFINITY, 0.0, 0.0);
        assert!(derivative(&VehicleState::default(), &MotorThrusts::ZERO, &p, &w).is_err());
        assert!(MotorThrusts::new(-0.1, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn rk4_rejects_bad_dt() {
        let s = VehicleState::default();
        let p = unit_params();
        for dt in [0.0, -0.01, f64::NAN] {
            assert!(step_rk4(&s, &MotorThrusts::ZERO, &p, &Vector3::zeros(), dt).is_err());
        }
    }

    #[test]
    fn rk4_fixed_point() {
        let s = VehicleState::at_rest(1.0, -2.0, 3.0, 0.4);
        let p = AeroParams {
            c_d: 0.8,
            c_dpsi: 0.3,
            ..unit_params()
        };
        let next = step_rk4(&s, &MotorThrusts::ZERO, &p, &Vector3::zeros(), DEFAULT_DT).unwrap();
        assert_eq!(next, s);
    }

    #[test]
    fn rk4_constant_vertical_acceleration_is_exact_parabola() {
        let p = unit_params();
        let t = MotorThrusts::new(0.5, 0.5, 0.5, 0.5).unwrap();
        let a = p.c_z * 1.0; // q1 = q2 = 1
        let dt = DEFAULT_DT;
        let mut s = VehicleState::default();
        let n = 400;
        for _ in 0..n {
            s = step_rk4(&s, &t, &p, &Vector3::zeros(), dt).unwrap();
        }
        let time = n as f64 * dt;
        assert_relative_eq!(s.z, 0.5 * a * time * time, max_relative = 1e-12);
        assert_relative_eq!(s.v_z, a * time, max_relative = 1e-12);
    }

    #[test]
    fn rk4_matches_exponential_drag_decay() {
        let p = AeroParams {
            c_d: 1.63,
            ..unit_params()
        };
        let v0 = 1.2;
        let mut s = VehicleState {
            v_x: v0,
            ..Default::default()
        };
        for _ in 0..200 {
            s = step_rk4(&s, &MotorThrusts::ZERO, &p, &Vector3::zeros(), DEFAULT_DT).unwrap();
        }
        let exact = v0 * (-p.c_d * 1.0f64).exp();
        assert_relative_eq!(s.v_x, exact, max_relative = 1e-6);
    }

    #[test]
    fn yaw_stays_wrapped() {
        let p = unit_params();
        let t = MotorThrusts::new(1.0, 0.0, 1.0, 0.0).unwrap();
        let mut s = VehicleState::default();
        for _ in 0..2000 {
            s = step_rk4(&s, &t, &p, &Vector3::zeros(), DEFAULT_DT).unwrap();
            assert!(s.psi > -PI && s.psi <= PI);
        }
    }

    #[test]
    fn wrap_angle_edges() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert_relative_eq!(wrap_angle(3.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-15);
        assert_relative_eq!(wrap_angle(-7.0), -7.0 + 2.0 * PI, epsilon = 1e-15);
    }

    #[test]
    fn yaw_arm_examples() {
        let g = GeometryConfig::new(0.08, PI / 2.0).unwrap();
        assert_relative_eq!(
            yaw_coefficient(&g),
            0.056_568_542_494_923_8,
            epsilon = 1e-12
        );
        let g = GeometryConfig::new(0.1, PI - 1e-12).unwrap();
        assert_relative_eq!(yaw_coefficient(&g), 0.1, epsilon = 1e-12);
        let g = GeometryConfig::new(0.1, 1e-9).unwrap();
        assert!(yaw_coefficient(&g) < 1e-9);
        assert!(GeometryConfig::new(0.1, 0.0).is_err());
        assert!(GeometryConfig::new(0.1, PI).is_err());
        assert!(GeometryConfig::new(0.0, 1.0).is_err());
    }

    #[test]
    fn thrust_rotates_with_heading() {
        let p = unit_params();
        let t = MotorThrusts::new(0.0, 0.0, 1.0, 1.0).unwrap(); // pure body +x
        let s = VehicleState::at_rest(0.0, 0.0, 0.0, PI / 2.0);
        let d = derivative(&s, &t, &p, &Vector3::zeros()).unwrap();
        assert_relative_eq!(d.a_x, 0.0, epsilon = 1e-15);
        assert_relative_eq!(d.a_y, 2.0, epsilon = 1e-15);
    }
}
