//! Two-stage hierarchical flight controller.
//!
//! Stage one runs PID loops on altitude and heading, producing a vertical
//! acceleration and a yaw torque, and inverts the pair-sum map `F1` to get
//! `(q1, q2)`. Stage two runs lateral PID loops and redistributes thrust
//! inside each diagonal pair without changing the pair sums.

use nalgebra::Matrix2;

use crate::dynamics::{wrap_angle, AeroParams, MotorThrusts, VehicleState};
use crate::error::{ensure_finite, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AxisGains {
    pub kp: f64,
    pub kd: f64,
    pub ki: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainSet {
    pub z: AxisGains,
    /// Heading loop. Its `ki` is unused; heading runs as PD.
    pub psi: AxisGains,
    pub x: AxisGains,
    pub y: AxisGains,
    /// Absolute bound on every integral accumulator.
    pub integral_clamp: f64,
}

impl GainSet {
    pub fn validate(&self) -> Result<()> {
        for (name, g) in [
            ("z", self.z),
            ("psi", self.psi),
            ("x", self.x),
            ("y", self.y),
        ] {
            for v in [g.kp, g.kd, g.ki] {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::ConfigKey(format!(
                        "gains for axis {name} must be finite and >= 0"
                    )));
                }
            }
        }
        if !(self.integral_clamp > 0.0 && self.integral_clamp.is_finite()) {
            return Err(Error::ConfigKey("gains.integral_clamp must be > 0".into()));
        }
        Ok(())
    }

    pub fn scaled(&self, k: f64) -> GainSet {
        let s = |g: AxisGains| AxisGains {
            kp: g.kp * k,
            kd: g.kd * k,
            ki: g.ki * k,
        };
        GainSet {
            z: s(self.z),
            psi: s(self.psi),
            x: s(self.x),
            y: s(self.y),
            integral_clamp: self.integral_clamp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Setpoint {
    pub x_d: f64,
    pub y_d: f64,
    pub z_d: f64,
    pub psi_d: f64,
    pub x_rate: f64,
    pub y_rate: f64,
    pub z_rate: f64,
    pub psi_rate: f64,
}

impl Setpoint {
    pub fn hold(x_d: f64, y_d: f64, z_d: f64, psi_d: f64) -> Self {
        Self {
            x_d,
            y_d,
            z_d,
            psi_d: wrap_angle(psi_d),
            ..Self::default()
        }
    }
}

/// Accelerations requested by the outer loops. Lateral values are world-frame m/s^2.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CommandedAccel {
    pub a_x: f64,
    pub a_y: f64,
    pub a_z: f64,
    pub tau_z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControllerState {
    pub int_z: f64,
    pub int_x: f64,
    pub int_y: f64,
    pub last_t: f64,
    /// Set when the previous output saturated a rotor; integrators hold while set.
    pub saturated: bool,
    /// Warm start for the Newton inversion.
    pub last_q: (f64, f64),
}

impl ControllerState {
    fn accumulate(acc: &mut f64, error: f64, dt: f64, clamp: f64, frozen: bool) {
        if !frozen {
            *acc = (*acc + error * dt).clamp(-clamp, clamp);
        }
    }
}

/// Options for [`control_step`] that are not gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOptions {
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Raise pair sums to the lateral demand when they are too small to carry it.
    pub lateral_floor: bool,
    /// When false the yaw torque command is forced to zero.
    pub hold_heading: bool,
}

impl Default for ControlOptions {
    fn default() -> Self {
        Self {
            newton_tol: 1e-12,
            newton_max_iter: 20,
            lateral_floor: true,
            hold_heading: true,
        }
    }
}

pub fn outer_loop_altitude_yaw(
    state: &VehicleState,
    sp: &Setpoint,
    gains: &GainSet,
    cs: &mut ControllerState,
    dt: f64,
) -> Result<(f64, f64)> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("dt must be > 0, got {dt}")));
    }
    let e_z = state.z - sp.z_d;
    ControllerState::accumulate(&mut cs.int_z, e_z, dt, gains.integral_clamp, cs.saturated);
    let a_z = -gains.z.kp * e_z - gains.z.kd * (state.v_z - sp.z_rate) - gains.z.ki * cs.int_z;

    let e_psi = wrap_angle(state.psi - sp.psi_d);
    let tau_z = -gains.psi.kp * e_psi - gains.psi.kd * (state.omega_z - sp.psi_rate);
    Ok((a_z, tau_z))
}

/// Result of inverting `F1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inversion {
    pub q1: f64,
    pub q2: f64,
    /// The command lay outside the reachable set and vertical was clamped.
    pub projected: bool,
    pub iterations: usize,
    /// Newton gave up and the closed form was used.
    pub fell_back: bool,
}

/// Analytic inverse of `F1`.
///
/// With `s = tau/C_psi` and `p = a_z/C_z + s^2` the pair sums satisfy
/// `q1 - q2 = s` and `q1 q2 = p`. When `p < 0` no non-negative pair exists;
/// `p` is raised to zero so the yaw torque stays exact and one pair shuts off.
pub fn invert_f1_closed_form(a_z: f64, tau_z: f64, params: &AeroParams) -> Result<Inversion> {
    ensure_finite("F1 target", &[a_z, tau_z])?;
    let s = tau_z / params.c_psi;
    let mut p = a_z / params.c_z + s * s;
    let projected = p < 0.0;
    if projected {
        p = 0.0;
    }
    let sum = (s * s + 4.0 * p).sqrt();
    let q1 = ((sum + s) / 2.0).max(0.0);
    let q2 = ((sum - s) / 2.0).max(0.0);
    Ok(Inversion {
        q1,
        q2,
        projected,
        iterations: 0,
        fell_back: false,
    })
}

/// Newton-Raphson inverse of `F1`.
///
/// `F1` is unchanged by `(q1, q2) -> (-q2, -q1)`, so the iteration runs
/// unconstrained and a root found in the negative quadrant is reflected back.
/// Falls back to [`invert_f1_closed_form`] on a singular Jacobian, on
/// non-convergence, or when the target is not reachable.
pub fn invert_f1_newton(
    a_z: f64,
    tau_z: f64,
    params: &AeroParams,
    init: (f64, f64),
    tol: f64,
    max_iter: usize,
) -> Result<Inversion> {
    ensure_finite("F1 target", &[a_z, tau_z])?;
    if !(tol > 0.0) || max_iter < 1 {
        return Err(Error::Domain(format!(
            "need tol > 0 and max_iter >= 1, got {tol}, {max_iter}"
        )));
    }
    let fallback = |iterations| {
        invert_f1_closed_form(a_z, tau_z, params).map(|inv| Inversion {
            iterations,
            fell_back: true,
            ..inv
        })
    };
    let s = tau_z / params.c_psi;
    if a_z / params.c_z + s * s < 0.0 {
        return fallback(0);
    }

    let mut q1 = init.0.max(0.0);
    let mut q2 = init.1.max(0.0);
    if !(q1.is_finite() && q2.is_finite()) {
        q1 = 0.0;
        q2 = 0.0;
    }
    for iteration in 0..=max_iter {
        let (fz, fpsi) = params.f1(q1, q2);
        let (rz, rpsi) = (fz - a_z, fpsi - tau_z);
        if rz.abs() < tol && rpsi.abs() < tol {
            if q1 < 0.0 && q2 < 0.0 {
                // mirrored root
                (q1, q2) = (-q2, -q1);
            }
            if q1 < -tol || q2 < -tol {
                return fallback(iteration);
            }
            return Ok(Inversion {
                q1: q1.max(0.0),
                q2: q2.max(0.0),
                projected: false,
                iterations: iteration,
                fell_back: false,
            });
        }
        if iteration == max_iter {
            break;
        }
        let d = q1 - q2;
        let jac = Matrix2::new(
            params.c_z * (q2 - 2.0 * d),
            params.c_z * (q1 + 2.0 * d),
            params.c_psi,
            -params.c_psi,
        );
        if jac.determinant().abs() < 1e-14 {
            return fallback(iteration);
        }
        let Some(inv) = jac.try_inverse() else {
            return fallback(iteration);
        };
        let step = inv * nalgebra::Vector2::new(rz, rpsi);
        q1 -= step.x;
        q2 -= step.y;
        if !(q1.is_finite() && q2.is_finite()) {
            return fallback(iteration);
        }
    }
    fallback(max_iter)
}

/// Splits pair sums into four rotors while adding lateral differentials.
///
/// `a_x`, `a_y` are half the body-frame lateral thrust in newtons: the
/// resulting body force is `(2 a_x, 2 a_y)`. They are scaled down together,
/// keeping direction, until every rotor is non-negative.
pub fn lateral_mix(q1: f64, q2: f64, a_x: f64, a_y: f64) -> Result<MotorThrusts> {
    ensure_finite("lateral mix input", &[q1, q2, a_x, a_y])?;
    if q1 < 0.0 || q2 < 0.0 {
        return Err(Error::Domain(format!(
            "pair sums must be non-negative, got ({q1}, {q2})"
        )));
    }
    let d1 = a_x + a_y;
    let d2 = a_x - a_y;
    let mut k: f64 = 1.0;
    if d1.abs() > q1 {
        k = k.min(q1 / d1.abs());
    }
    if d2.abs() > q2 {
        k = k.min(q2 / d2.abs());
    }
    let (d1, d2) = (d1 * k, d2 * k);
    Ok(MotorThrusts {
        m1: ((q1 - d1) / 2.0).max(0.0),
        m2: ((q2 - d2) / 2.0).max(0.0),
        m3: ((q1 + d1) / 2.0).max(0.0),
        m4: ((q2 + d2) / 2.0).max(0.0),
    })
}

/// Lateral PID in the world frame, m/s^2.
pub fn outer_loop_lateral(
    state: &VehicleState,
    sp: &Setpoint,
    gains: &GainSet,
    cs: &mut ControllerState,
    dt: f64,
) -> (f64, f64) {
    let e_x = state.x - sp.x_d;
    let e_y = state.y - sp.y_d;
    ControllerState::accumulate(&mut cs.int_x, e_x, dt, gains.integral_clamp, cs.saturated);
    ControllerState::accumulate(&mut cs.int_y, e_y, dt, gains.integral_clamp, cs.saturated);
    let a_x = -gains.x.kp * e_x - gains.x.kd * (state.v_x - sp.x_rate) - gains.x.ki * cs.int_x;
    let a_y = -gains.y.kp * e_y - gains.y.kd * (state.v_y - sp.y_rate) - gains.y.ki * cs.int_y;
    (a_x, a_y)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    pub thrusts: MotorThrusts,
    pub accel: CommandedAccel,
    pub inversion: Inversion,
    pub saturated: bool,
}

/// Full controller: altitude/yaw loops, `F1` inversion, lateral loops,
/// mixing and per-rotor saturation.
pub fn control_step(
    state: &VehicleState,
    sp: &Setpoint,
    gains: &GainSet,
    params: &AeroParams,
    cs: &mut ControllerState,
    dt: f64,
    options: &ControlOptions,
) -> Result<ControlOutput> {
    ensure_finite("controller state estimate", &state.as_array())?;
    let (a_z, mut tau_z) = outer_loop_altitude_yaw(state, sp, gains, cs, dt)?;
    if !options.hold_heading {
        tau_z = 0.0;
    }
    let inversion = invert_f1_newton(
        a_z,
        tau_z,
        params,
        cs.last_q,
        options.newton_tol,
        options.newton_max_iter,
    )?;
    let (a_x, a_y) = outer_loop_lateral(state, sp, gains, cs, dt);

    // world -> body, then acceleration -> half differential thrust
    let (s, c) = state.psi.sin_cos();
    let half = params.m / 2.0;
    let dx = half * (c * a_x + s * a_y);
    let dy = half * (-s * a_x + c * a_y);

    let (mut q1, mut q2) = (inversion.q1, inversion.q2);
    if options.lateral_floor {
        let cap = 2.0 * params.t_max;
        q1 = q1.max((dx + dy).abs().min(cap));
        q2 = q2.max((dx - dy).abs().min(cap));
    }
    let mut thrusts = lateral_mix(q1, q2, dx, dy)?;
    let saturated = thrusts.saturate(params.t_max);
    cs.saturated = saturated;
    cs.last_q = (inversion.q1, inversion.q2);

    Ok(ControlOutput {
        thrusts,
        accel: CommandedAccel {
            a_x,
            a_y,
            a_z,
            tau_z,
        },
        inversion,
        saturated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

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

    fn gains(kp: f64, kd: f64, ki: f64) -> GainSet {
        let g = AxisGains { kp, kd, ki };
        GainSet {
            z: g,
            psi: g,
            x: g,
            y: g,
            integral_clamp: 1.0,
        }
    }

    #[test]
    fn zero_error_gives_zero_command() {
        let s = VehicleState::at_rest(1.0, 2.0, 3.0, 0.5);
        let sp = Setpoint::hold(1.0, 2.0, 3.0, 0.5);
        let mut cs = ControllerState::default();
        let (a, t) =
            outer_loop_altitude_yaw(&s, &sp, &gains(1.0, 1.0, 1.0), &mut cs, 0.01).unwrap();
        assert_eq!((a, t), (0.0, 0.0));
    }

    #[test]
    fn low_altitude_commands_climb() {
        let s = VehicleState::at_rest(0.0, 0.0, 1.0, 0.0);
        let sp = Setpoint::hold(0.0, 0.0, 2.0, 0.0);
        let mut cs = ControllerState::default();
        let (a, _) =
            outer_loop_altitude_yaw(&s, &sp, &gains(1.0, 0.0, 0.0), &mut cs, 0.01).unwrap();
        assert_eq!(a, 1.0);
    }

    #[test]
    fn yaw_error_uses_the_short_way_round() {
        let s = VehicleState::at_rest(0.0, 0.0, 0.0, 179f64.to_radians());
        let sp = Setpoint::hold(0.0, 0.0, 0.0, -179f64.to_radians());
        let mut cs = ControllerState::default();
        let (_, tau) =
            outer_loop_altitude_yaw(&s, &sp, &gains(1.0, 0.0, 0.0), &mut cs, 0.01).unwrap();
        // 179 deg -> -179 deg is a +2 deg turn, not -358 deg
        assert_relative_eq!(tau, 2f64.to_radians(), epsilon = 1e-12);
    }

    #[test]
    fn integrator_is_clamped_and_freezes_on_saturation() {
        let s = VehicleState::at_rest(0.0, 0.0, 0.0, 0.0);
        let sp = Setpoint::hold(0.0, 0.0, 10.0, 0.0);
        let g = gains(0.0, 0.0, 1.0);
        let mut cs = ControllerState::default();
        for _ in 0..1000 {
            outer_loop_altitude_yaw(&s, &sp, &g, &mut cs, 0.01).unwrap();
        }
        assert_eq!(cs.int_z, -g.integral_clamp);
        let mut cs = ControllerState {
            saturated: true,
            ..Default::default()
        };
        outer_loop_altitude_yaw(&s, &sp, &g, &mut cs, 0.01).unwrap();
        assert_eq!(cs.int_z, 0.0);
    }

    #[test]
    fn closed_form_examples() {
        let p = unit_params();
        let r = invert_f1_closed_form(0.0, 0.0, &p).unwrap();
        assert_eq!((r.q1, r.q2), (0.0, 0.0));

        let r = invert_f1_closed_form(3.0, 1.0, &p).unwrap();
        let root = 17f64.sqrt();
        assert_relative_eq!(r.q1, (root + 1.0) / 2.0, epsilon = 1e-14);
        assert_relative_eq!(r.q2, (root - 1.0) / 2.0, epsilon = 1e-14);
        let (az, tau) = p.f1(r.q1, r.q2);
        assert_relative_eq!(az, 3.0, epsilon = 1e-12);
        assert_relative_eq!(tau, 1.0, epsilon = 1e-12);

        let r = invert_f1_closed_form(-4.0, 2.0, &p).unwrap();
        assert_eq!((r.q1, r.q2), (2.0, 0.0));
        assert_eq!(p.f1(r.q1, r.q2).0, -4.0);
    }

    #[test]
    fn infeasible_commands_keep_yaw_exact() {
        let p = AeroParams {
            c_z: 2.5,
            c_psi: 0.7,
            ..unit_params()
        };
        let r = invert_f1_closed_form(-10.0, 0.35, &p).unwrap();
        assert!(r.projected);
        let (az, tau) = p.f1(r.q1, r.q2);
        let s = 0.35 / 0.7;
        assert_relative_eq!(tau, 0.35, epsilon = 1e-14);
        assert_relative_eq!(az, -p.c_z * s * s, epsilon = 1e-14);
        assert_eq!(r.q1.min(r.q2), 0.0);
    }

    #[test]
    fn newton_example() {
        let p = unit_params();
        let r = invert_f1_newton(3.0, 1.0, &p, (1.0, 1.0), 1e-9, 20).unwrap();
        assert!(!r.fell_back);
        assert!(r.iterations <= 20);
        assert_relative_eq!(r.q1, 2.561_552_812_808_830_4, epsilon = 1e-8);
        assert_relative_eq!(r.q2, 1.561_552_812_808_830_4, epsilon = 1e-8);
    }

    #[test]
    fn newton_already_converged() {
        let r = invert_f1_newton(0.0, 0.0, &unit_params(), (0.0, 0.0), 1e-9, 20).unwrap();
        assert_eq!(
            (r.q1, r.q2, r.iterations, r.fell_back),
            (0.0, 0.0, 0, false)
        );
    }

    #[test]
    fn newton_falls_back_on_singular_start_and_infeasible_target() {
        let p = unit_params();
        let r = invert_f1_newton(1.0, 0.0, &p, (0.0, 0.0), 1e-12, 20).unwrap();
        assert!(r.fell_back);
        assert_relative_eq!(r.q1, 1.0, epsilon = 1e-12);
        let r = invert_f1_newton(-1.0, 0.0, &p, (1.0, 1.0), 1e-12, 20).unwrap();
        assert!(r.fell_back && r.projected);
        assert!(invert_f1_newton(1.0, 0.0, &p, (1.0, 1.0), 0.0, 20).is_err());
        assert!(invert_f1_newton(1.0, 0.0, &p, (1.0, 1.0), 1e-9, 0).is_err());
    }

    #[test]
    fn mix_examples() {
        let m = lateral_mix(4.0, 4.0, 1.0, 0.0).unwrap();
        assert_eq!(m.as_array(), [1.5, 1.5, 2.5, 2.5]);
        assert_eq!((m.q1(), m.q2()), (4.0, 4.0));

        let m = lateral_mix(3.0, 5.0, 0.0, 0.0).unwrap();
        assert_eq!(m.as_array(), [1.5, 2.5, 1.5, 2.5]);

        let m = lateral_mix(1.0, 1.0, 5.0, 0.0).unwrap();
        assert_eq!(m.as_array(), [0.0, 0.0, 1.0, 1.0]);
        assert!(lateral_mix(-1.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn mix_produces_pure_body_forces() {
        let m = lateral_mix(2.0, 2.0, 0.0, 0.4).unwrap();
        let (fx, fy) = m.body_force();
        assert_relative_eq!(fx, 0.0, epsilon = 1e-15);
        assert_relative_eq!(fy, 0.8, epsilon = 1e-15);
    }

    fn plant() -> AeroParams {
        AeroParams {
            m: 0.1262,
            c_d: 1.63,
            c_z: 14.0,
            c_psi: 28.0,
            c_dpsi: 1.4,
            t_max: 0.154,
        }
    }

    #[test]
    fn control_step_at_setpoint_is_idle() {
        let s = VehicleState::at_rest(0.5, -0.5, 1.75, 0.2);
        let sp = Setpoint::hold(0.5, -0.5, 1.75, 0.2);
        let mut cs = ControllerState::default();
        let out = control_step(
            &s,
            &sp,
            &gains(2.0, 1.0, 0.1),
            &plant(),
            &mut cs,
            0.005,
            &ControlOptions::default(),
        )
        .unwrap();
        assert_eq!(out.thrusts, MotorThrusts::ZERO);
    }

    #[test]
    fn control_step_climb_is_symmetric() {
        let s = VehicleState::at_rest(0.0, 0.0, 1.0, 0.0);
        let sp = Setpoint::hold(0.0, 0.0, 1.2, 0.0);
        let mut cs = ControllerState::default();
        let out = control_step(
            &s,
            &sp,
            &gains(2.0, 1.0, 0.0),
            &plant(),
            &mut cs,
            0.005,
            &ControlOptions::default(),
        )
        .unwrap();
        let m = out.thrusts;
        assert!(m.m1 > 0.0);
        assert_relative_eq!(m.m1, m.m2, epsilon = 1e-12);
        assert_relative_eq!(m.m1, m.m3, epsilon = 1e-12);
        assert_relative_eq!(m.m1, m.m4, epsilon = 1e-12);
    }

    #[test]
    fn control_step_positive_x_error_pushes_plus_x() {
        let s = VehicleState::at_rest(-0.3, 0.0, 1.0, 0.0);
        let sp = Setpoint::hold(0.0, 0.0, 1.0, 0.0);
        let mut cs = ControllerState::default();
        let out = control_step(
            &s,
            &sp,
            &gains(2.0, 1.0, 0.0),
            &plant(),
            &mut cs,
            0.005,
            &ControlOptions::default(),
        )
        .unwrap();
        let m = out.thrusts;
        assert!(m.m3 > m.m1 && m.m4 > m.m2);
        assert_relative_eq!(m.m3 - m.m1, m.m4 - m.m2, epsilon = 1e-12);
    }

    #[test]
    fn heading_hold_off_zeroes_torque() {
        let s = VehicleState::at_rest(0.0, 0.0, 1.0, 1.0);
        let sp = Setpoint::hold(0.0, 0.0, 1.0, 0.0);
        let mut cs = ControllerState::default();
        let opts = ControlOptions {
            hold_heading: false,
            ..Default::default()
        };
        let out = control_step(
            &s,
            &sp,
            &gains(2.0, 1.0, 0.0),
            &plant(),
            &mut cs,
            0.005,
            &opts,
        )
        .unwrap();
        assert_eq!(out.accel.tau_z, 0.0);
        assert_eq!(out.thrusts, MotorThrusts::ZERO);
    }

    proptest! {
        #[test]
        fn mixing_conserves_pair_sums(q1 in 0.0..5.0f64, q2 in 0.0..5.0f64, ax in -3.0..3.0f64, ay in -3.0..3.0f64) {
            let m = lateral_mix(q1, q2, ax, ay).unwrap();
            prop_assert!(m.as_array().iter().all(|&v| v >= 0.0));
            if (ax + ay).abs() <= q1 && (ax - ay).abs() <= q2 {
                prop_assert!((m.q1() - q1).abs() < 1e-12);
                prop_assert!((m.q2() - q2).abs() < 1e-12);
            }
        }

        #[test]
        fn inversion_round_trip(az in -2.0..2.0f64, tau in -2.0..2.0f64, cz in 0.5..20.0f64, cpsi in 0.5..40.0f64) {
            let p = AeroParams { c_z: cz, c_psi: cpsi, ..unit_params() };
            let r = invert_f1_closed_form(az, tau, &p).unwrap();
            let (raz, rtau) = p.f1(r.q1, r.q2);
            prop_assert!((rtau - tau).abs() < 1e-8);
            if r.projected {
                let s = tau / cpsi;
                prop_assert!((raz + cz * s * s).abs() < 1e-8);
            } else {
                prop_assert!((raz - az).abs() < 1e-8);
            }
        }

        #[test]
        fn gain_scaling_never_flips_differentials(
            ex in -1.0..1.0f64, ey in -1.0..1.0f64, ez in -0.5..0.5f64, epsi in -PI..PI, k in 0.1..10.0f64
        ) {
            let s = VehicleState::at_rest(ex, ey, 1.0 + ez, epsi);
            let sp = Setpoint::hold(0.0, 0.0, 1.0, 0.0);
            let g = gains(0.8, 0.3, 0.0);
            let p = plant();
            let opts = ControlOptions::default();
            let mut cs_a = ControllerState::default();
            let mut cs_b = ControllerState::default();
            let a = control_step(&s, &sp, &g, &p, &mut cs_a, 0.005, &opts).unwrap();
            let b = control_step(&s, &sp, &g.scaled(k), &p, &mut cs_b, 0.005, &opts).unwrap();
            prop_assert!((b.accel.a_x - k * a.accel.a_x).abs() < 1e-9);
            prop_assert!((b.accel.a_z - k * a.accel.a_z).abs() < 1e-9);
            prop_assert!((b.accel.tau_z - k * a.accel.tau_z).abs() < 1e-9);
            let sign = |v: f64| if v.abs() < 1e-12 { 0 } else { v.signum() as i32 };
            let (ta, tb) = (a.thrusts, b.thrusts);
            prop_assert!(sign(ta.m3 - ta.m1) * sign(tb.m3 - tb.m1) >= 0);
            prop_assert!(sign(ta.m4 - ta.m2) * sign(tb.m4 - tb.m2) >= 0);
        }
    }
}
