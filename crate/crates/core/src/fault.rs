//! Rotor fault detection, isolation and fault-tolerant thrust allocation.
//!
//! Detection compares measured yaw rate, vertical acceleration and lateral
//! velocity against what the dynamics model predicts for the thrusts that
//! were commanded. A verdict is issued only when the heading error, the yaw
//! rate residual and the vertical acceleration residual all stay above their
//! thresholds for a full persistence window. The sign of the yaw residual
//! picks the diagonal pair and the sign of the body-frame lateral residual
//! picks the rotor within it.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;

use crate::dynamics::{derivative, step_rk4, wrap_angle, AeroParams, MotorThrusts, VehicleState};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rotor {
    M1,
    M2,
    M3,
    M4,
}

impl Rotor {
    pub const ALL: [Rotor; 4] = [Rotor::M1, Rotor::M2, Rotor::M3, Rotor::M4];

    pub fn index(self) -> usize {
        match self {
            Rotor::M1 => 1,
            Rotor::M2 => 2,
            Rotor::M3 => 3,
            Rotor::M4 => 4,
        }
    }

    pub fn from_index(i: usize) -> Result<Rotor> {
        match i {
            1 => Ok(Rotor::M1),
            2 => Ok(Rotor::M2),
            3 => Ok(Rotor::M3),
            4 => Ok(Rotor::M4),
            _ => Err(Error::Domain(format!("rotor index {i} not in 1..=4"))),
        }
    }
}

impl fmt::Display for Rotor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m{}", self.index())
    }
}

/// How the lateral command magnitude in the reallocation law is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LateralNorm {
    /// `sqrt(a_x^2 + a_y^2)`
    Euclidean,
    /// `|a_x + a_y|`
    AbsSum,
}

impl FromStr for LateralNorm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(LateralNorm::Euclidean),
            "abs_sum" => Ok(LateralNorm::AbsSum),
            other => Err(Error::ConfigKey(format!(
                "unknown lateral norm `{other}` (expected euclidean | abs_sum)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultConfig {
    /// Yaw-rate residual threshold, rad/s.
    pub k_omega_z: f64,
    /// Vertical acceleration residual threshold, m/s^2.
    pub k_a_z: f64,
    /// Persistence window, s.
    pub window: f64,
    /// Dead-band on the lateral velocity residual, m/s.
    pub v_residual_eps: f64,
    /// Dead-band on the heading error, rad.
    pub psi_eps: f64,
    pub norm: LateralNorm,
}

impl FaultConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("fault.k_omega_z", self.k_omega_z),
            ("fault.k_a_z", self.k_a_z),
            ("fault.window", self.window),
            ("fault.v_residual_eps", self.v_residual_eps),
            ("fault.psi_eps", self.psi_eps),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::ConfigKey(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// One residual sample. Lateral residuals are body-frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ResidualSample {
    pub t: f64,
    pub e_psi: f64,
    pub e_omega_z: f64,
    pub e_a_z: f64,
    pub e_v_x: f64,
    pub e_v_y: f64,
}

/// Time-ordered residuals over a bounded trailing span.
#[derive(Debug, Clone, PartialEq)]
pub struct FaultEvidence {
    samples: VecDeque<ResidualSample>,
    span: f64,
}

impl FaultEvidence {
    /// Keeps samples no older than `span` seconds behind the newest one.
    pub fn new(span: f64) -> Self {
        Self {
            samples: VecDeque::new(),
            span,
        }
    }

    pub fn push(&mut self, sample: ResidualSample) -> Result<()> {
        if let Some(last) = self.samples.back() {
            if sample.t < last.t {
                return Err(Error::Domain(format!(
                    "evidence out of order: {} after {}",
                    sample.t, last.t
                )));
            }
        }
        self.samples.push_back(sample);
        let horizon = sample.t - self.span;
        // keep one sample at or before the horizon so coverage can be proven
        while self.samples.len() > 1 && self.samples[1].t <= horizon {
            self.samples.pop_front();
        }
        Ok(())
    }

    pub fn samples(&self) -> impl Iterator<Item = &ResidualSample> {
        self.samples.iter()
    }

    pub fn latest(&self) -> Option<&ResidualSample> {
        self.samples.back()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn clear(&mut self) {
        self.samples.clear();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Verdict {
    #[default]
    Healthy,
    Failed {
        t: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FaultStatus {
    pub rotors: [Verdict; 4],
}

impl FaultStatus {
    pub fn failed_rotor(rotor: Rotor, t: f64) -> Self {
        let mut s = Self::default();
        s.rotors[rotor.index() - 1] = Verdict::Failed { t };
        s
    }

    pub fn failed(&self) -> Vec<(Rotor, f64)> {
        Rotor::ALL
            .iter()
            .filter_map(|&r| match self.rotors[r.index() - 1] {
                Verdict::Failed { t } => Some((r, t)),
                Verdict::Healthy => None,
            })
            .collect()
    }

    pub fn is_healthy(&self) -> bool {
        self.failed().is_empty()
    }

    /// Trace representation: `healthy` or `FAILED_m<i>`.
    pub fn label(&self) -> String {
        match self.failed().as_slice() {
            [] => "healthy".to_string(),
            list => list
                .iter()
                .map(|(r, _)| format!("FAILED_{r}"))
                .collect::<Vec<_>>()
                .join("|"),
        }
    }

    pub fn parse_label(label: &str) -> Result<Vec<Rotor>> {
        if label == "healthy" {
            return Ok(Vec::new());
        }
        label
            .split('|')
            .map(|part| {
                part.strip_prefix("FAILED_m")
                    .and_then(|n| n.parse::<usize>().ok())
                    .ok_or_else(|| Error::Domain(format!("bad fault status `{label}`")))
                    .and_then(Rotor::from_index)
            })
            .collect()
    }
}

/// Model prediction for the quantities the detector watches.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExpectedResponse {
    /// Yaw rate after `dt`, rad/s.
    pub omega_z: f64,
    /// Instantaneous vertical acceleration, m/s^2.
    pub a_z: f64,
    /// World-frame lateral velocity after `dt`, m/s.
    pub v_x: f64,
    pub v_y: f64,
}

/// Evaluates the dynamics for the commanded thrusts. With `dt = 0` the
/// velocity and yaw-rate fields are the current ones and only `a_z` carries
/// model content.
pub fn expected_response(
    state: &VehicleState,
    thrusts: &MotorThrusts,
    params: &AeroParams,
    dt: f64,
) -> Result<ExpectedResponse> {
    let d = derivative(state, thrusts, params, &Vector3::zeros())?;
    let next = if dt > 0.0 {
        step_rk4(state, thrusts, params, &Vector3::zeros(), dt)?
    } else {
        *state
    };
    Ok(ExpectedResponse {
        omega_z: next.omega_z,
        a_z: d.a_z,
        v_x: next.v_x,
        v_y: next.v_y,
    })
}

/// What the detector gets to see at each control tick.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Measurement {
    pub t: f64,
    pub psi: f64,
    pub omega_z: f64,
    pub a_z: f64,
    pub v_x: f64,
    pub v_y: f64,
    pub v_z: f64,
}

impl Measurement {
    fn as_state(&self) -> VehicleState {
        VehicleState {
            v_x: self.v_x,
            v_y: self.v_y,
            v_z: self.v_z,
            psi: self.psi,
            omega_z: self.omega_z,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Increment {
    t: f64,
    omega: f64,
    v_x: f64,
    v_y: f64,
    a_z: f64,
}

/// Turns measurements and commanded thrusts into window-propagated residuals.
///
/// Each tick the model is stepped from the previous measurement with the
/// thrust that was commanded over the interval; the mismatch against the new
/// measurement is summed over the trailing window. That sum equals the
/// difference between the measurement and the model propagated over one
/// window from the window-start measurement.
#[derive(Debug, Clone)]
pub struct ResidualGenerator {
    params: AeroParams,
    window: f64,
    ring: VecDeque<Increment>,
    prev: Option<Measurement>,
}

impl ResidualGenerator {
    pub fn new(params: AeroParams, window: f64) -> Self {
        Self {
            params,
            window,
            ring: VecDeque::new(),
            prev: None,
        }
    }

    /// `applied` is the command in force since the previous measurement.
    /// Returns `None` until two measurements have been seen.
    pub fn update(
        &mut self,
        meas: &Measurement,
        applied: &MotorThrusts,
        psi_d: f64,
    ) -> Result<Option<ResidualSample>> {
        let Some(prev) = self.prev.replace(*meas) else {
            return Ok(None);
        };
        let dt = meas.t - prev.t;
        if !(dt > 0.0) {
            return Err(Error::Domain(format!(
                "measurements must advance in time ({} -> {})",
                prev.t, meas.t
            )));
        }
        let start = prev.as_state();
        let predicted = step_rk4(&start, applied, &self.params, &Vector3::zeros(), dt)?;
        // acceleration measured at the current tick, thrusts unchanged since prev
        let mut now = meas.as_state();
        now.psi = meas.psi;
        let a_exp = derivative(&now, applied, &self.params, &Vector3::zeros())?.a_z;

        let (s, c) = prev.psi.sin_cos();
        let dvx = meas.v_x - predicted.v_x;
        let dvy = meas.v_y - predicted.v_y;
        self.ring.push_back(Increment {
            t: meas.t,
            omega: meas.omega_z - predicted.omega_z,
            v_x: c * dvx + s * dvy,
            v_y: -s * dvx + c * dvy,
            a_z: meas.a_z - a_exp,
        });
        let horizon = meas.t - self.window;
        while self.ring.front().is_some_and(|inc| inc.t <= horizon) {
            self.ring.pop_front();
        }

        let (mut e_omega, mut e_vx, mut e_vy, mut e_az) = (0.0, 0.0, 0.0, 0.0);
        for inc in &self.ring {
            e_omega += inc.omega;
            e_vx += inc.v_x;
            e_vy += inc.v_y;
            e_az += inc.a_z;
        }
        e_az /= self.ring.len() as f64;

        Ok(Some(ResidualSample {
            t: meas.t,
            e_psi: wrap_angle(meas.psi - psi_d),
            e_omega_z: e_omega,
            e_a_z: e_az,
            e_v_x: e_vx,
            e_v_y: e_vy,
        }))
    }

    pub fn reset(&mut self) {
        self.ring.clear();
        self.prev = None;
    }
}

/// Picks the failed rotor from residual signs.
///
/// Losing a rotor of the first pair (m1, m3) drops `q1`, so the yaw residual
/// goes negative; losing m2 or m4 drives it positive. The missing thrust
/// vector then shows up in the body-frame lateral residual: +y for m1 and m4,
/// -y for m2 and m3.
pub fn isolate(e_omega_z: f64, e_v_y: f64, v_eps: f64) -> Option<Rotor> {
    if e_v_y.abs() <= v_eps {
        return None;
    }
    match (e_omega_z < 0.0, e_v_y > 0.0) {
        (true, true) => Some(Rotor::M1),
        (true, false) => Some(Rotor::M3),
        (false, true) => Some(Rotor::M4),
        (false, false) => Some(Rotor::M2),
    }
}

/// Decision over the trailing window of `evidence`.
///
/// Returns all-healthy when the evidence does not yet cover a full window.
pub fn detect(evidence: &FaultEvidence, config: &FaultConfig) -> FaultStatus {
    let Some(last) = evidence.latest() else {
        return FaultStatus::default();
    };
    let start = last.t - config.window;
    let covered = evidence
        .samples()
        .next()
        .is_some_and(|first| first.t <= start + 1e-9);
    if !covered {
        return FaultStatus::default();
    }
    let persistent = evidence.samples().filter(|s| s.t >= start - 1e-9).all(|s| {
        s.e_psi.abs() > config.psi_eps
            && s.e_omega_z.abs() > config.k_omega_z
            && s.e_a_z.abs() > config.k_a_z
    });
    if !persistent {
        return FaultStatus::default();
    }
    match isolate(last.e_omega_z, last.e_v_y, config.v_residual_eps) {
        Some(rotor) => FaultStatus::failed_rotor(rotor, last.t),
        None => FaultStatus::default(),
    }
}

/// Online detector: residual generator, evidence buffer and a latched verdict.
#[derive(Debug, Clone)]
pub struct Detector {
    config: FaultConfig,
    residuals: ResidualGenerator,
    evidence: FaultEvidence,
    status: FaultStatus,
    last_sample: Option<ResidualSample>,
}

impl Detector {
    pub fn new(config: FaultConfig, params: AeroParams) -> Self {
        Self {
            residuals: ResidualGenerator::new(params, config.window),
            evidence: FaultEvidence::new(config.window),
            config,
            status: FaultStatus::default(),
            last_sample: None,
        }
    }

    pub fn status(&self) -> FaultStatus {
        self.status
    }

    pub fn last_sample(&self) -> Option<ResidualSample> {
        self.last_sample
    }

    /// Feeds one tick. Once a rotor is declared failed the verdict never changes.
    pub fn update(
        &mut self,
        meas: &Measurement,
        applied: &MotorThrusts,
        psi_d: f64,
    ) -> Result<FaultStatus> {
        if let Some(sample) = self.residuals.update(meas, applied, psi_d)? {
            self.last_sample = Some(sample);
            if self.status.is_healthy() {
                self.evidence.push(sample)?;
                self.status = detect(&self.evidence, &self.config);
            }
        }
        Ok(self.status)
    }
}

/// Thrust plan after a single rotor failure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FtcCommand {
    pub thrusts: MotorThrusts,
    /// Desired direction of travel, `atan2(a_y, a_x)`, world frame.
    pub psi_d: f64,
    /// Body-frame angle of the surviving pair's combined push.
    pub push_angle: f64,
    pub off: Rotor,
}

impl FtcCommand {
    /// Yaw that points the surviving pair's push along `psi_d`.
    pub fn heading_setpoint(&self) -> f64 {
        wrap_angle(self.psi_d - self.push_angle)
    }
}

/// Surviving layout after `failed` is lost.
///
/// Returns `(switched_off, first_pair_rotor, second_pair_rotor, push_angle)`.
/// m1 lost shuts m4 and flies on m3/m2; the rest follow by the 90 degree
/// symmetry of the rotor layout (m1 -> m4 -> m3 -> m2 -> m1).
pub fn ftc_layout(failed: Rotor) -> (Rotor, Rotor, Rotor, f64) {
    use std::f64::consts::{FRAC_PI_2, PI};
    match failed {
        Rotor::M1 => (Rotor::M4, Rotor::M3, Rotor::M2, FRAC_PI_2),
        Rotor::M2 => (Rotor::M1, Rotor::M3, Rotor::M4, 0.0),
        Rotor::M3 => (Rotor::M2, Rotor::M1, Rotor::M4, -FRAC_PI_2),
        Rotor::M4 => (Rotor::M3, Rotor::M1, Rotor::M2, PI),
    }
}

/// Reallocation on two adjacent rotors.
///
/// `a_x`, `a_y` are the lateral command and `tau_z` the pair imbalance, all in
/// newtons. The surviving first-pair rotor gets `(|a| + tau)/2`, the
/// second-pair rotor `(|a| - tau)/2`, each clamped to `[0, t_max]`.
pub fn ftc_allocate(
    a_x: f64,
    a_y: f64,
    tau_z: f64,
    failed: &[Rotor],
    t_max: f64,
    norm: LateralNorm,
) -> Result<FtcCommand> {
    crate::error::ensure_finite("ftc command", &[a_x, a_y, tau_z])?;
    let rotor = match failed {
        [r] => *r,
        [] => return Err(Error::Domain("ftc_allocate needs one failed rotor".into())),
        many => return Err(Error::Unrecoverable(many.len())),
    };
    let (off, first, second, push_angle) = ftc_layout(rotor);
    let magnitude = match norm {
        LateralNorm::Euclidean => a_x.hypot(a_y),
        LateralNorm::AbsSum => (a_x + a_y).abs(),
    };
    let mut thrusts = MotorThrusts::ZERO;
    thrusts.set(first.index(), ((magnitude + tau_z) / 2.0).clamp(0.0, t_max));
    thrusts.set(
        second.index(),
        ((magnitude - tau_z) / 2.0).clamp(0.0, t_max),
    );
    debug_assert_eq!(thrusts.get(rotor.index()), 0.0);
    debug_assert_eq!(thrusts.get(off.index()), 0.0);
    Ok(FtcCommand {
        thrusts,
        psi_d: a_y.atan2(a_x),
        push_angle,
        off,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params() -> AeroParams {
        AeroParams {
            m: 0.1262,
            c_d: 1.63,
            c_z: 14.0,
            c_psi: 28.0,
            c_dpsi: 1.4,
            t_max: 0.154,
        }
    }

    fn config() -> FaultConfig {
        FaultConfig {
            k_omega_z: 0.1,
            k_a_z: 0.05,
            window: 1.0,
            v_residual_eps: 0.01,
            psi_eps: 0.01,
            norm: LateralNorm::Euclidean,
        }
    }

    fn evidence_from(samples: &[ResidualSample]) -> FaultEvidence {
        let mut e = FaultEvidence::new(1.0);
        for s in samples {
            e.push(*s).unwrap();
        }
        e
    }

    fn faulty(t: f64) -> ResidualSample {
        ResidualSample {
            t,
            e_psi: -0.2,
            e_omega_z: -0.5,
            e_a_z: -0.3,
            e_v_x: 0.2,
            e_v_y: 0.2,
        }
    }

    #[test]
    fn expected_response_at_rest_is_zero() {
        let r = expected_response(
            &VehicleState::default(),
            &MotorThrusts::ZERO,
            &params(),
            0.005,
        )
        .unwrap();
        assert_eq!(r, ExpectedResponse::default());
    }

    #[test]
    fn expected_response_balanced_pairs() {
        let p = params();
        let q = 0.05;
        let s = VehicleState {
            v_z: 0.2,
            omega_z: 0.4,
            ..Default::default()
        };
        let r = expected_response(&s, &MotorThrusts::new(q, q, q, q).unwrap(), &p, 0.0).unwrap();
        assert_relative_eq!(
            r.a_z,
            p.c_z * (2.0 * q) * (2.0 * q) - p.c_d * 0.2,
            epsilon = 1e-15
        );
        let r = expected_response(&s, &MotorThrusts::new(q, q, q, q).unwrap(), &p, 0.01).unwrap();
        // only damping acts on yaw rate
        assert_relative_eq!(
            r.omega_z,
            0.4 * (-p.c_dpsi * 0.01f64).exp(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn zero_residuals_are_healthy() {
        let samples: Vec<_> = (0..300)
            .map(|i| ResidualSample {
                t: i as f64 * 0.005,
                ..Default::default()
            })
            .collect();
        assert!(detect(&evidence_from(&samples), &config()).is_healthy());
    }

    #[test]
    fn insufficient_evidence_gives_no_verdict() {
        let samples: Vec<_> = (0..100).map(|i| faulty(i as f64 * 0.005)).collect();
        assert!(detect(&evidence_from(&samples), &config()).is_healthy());
    }

    #[test]
    fn persistent_residuals_isolate_m1() {
        let samples: Vec<_> = (0..=200).map(|i| faulty(i as f64 * 0.005)).collect();
        let status = detect(&evidence_from(&samples), &config());
        assert_eq!(status.failed(), vec![(Rotor::M1, 1.0)]);
        assert_eq!(status.label(), "FAILED_m1");
    }

    #[test]
    fn single_gap_breaks_persistence() {
        let mut samples: Vec<_> = (0..=200).map(|i| faulty(i as f64 * 0.005)).collect();
        samples[150].e_a_z = 0.0;
        assert!(detect(&evidence_from(&samples), &config()).is_healthy());
    }

    #[test]
    fn isolation_table() {
        assert_eq!(isolate(-1.0, 0.5, 0.1), Some(Rotor::M1));
        assert_eq!(isolate(-1.0, -0.5, 0.1), Some(Rotor::M3));
        assert_eq!(isolate(1.0, -0.5, 0.1), Some(Rotor::M2));
        assert_eq!(isolate(1.0, 0.5, 0.1), Some(Rotor::M4));
        assert_eq!(isolate(1.0, 0.05, 0.1), None);
    }

    #[test]
    fn isolation_table_matches_missing_thrust() {
        // the residual left by a dead rotor is minus its modelled contribution
        let p = params();
        for rotor in Rotor::ALL {
            let mut cmd = MotorThrusts::from_array([0.05; 4]);
            let full = derivative(&VehicleState::default(), &cmd, &p, &Vector3::zeros()).unwrap();
            cmd.set(rotor.index(), 0.0);
            let real = derivative(&VehicleState::default(), &cmd, &p, &Vector3::zeros()).unwrap();
            let e_omega = real.omega_dot - full.omega_dot;
            let e_vy = real.a_y - full.a_y;
            assert_eq!(isolate(e_omega, e_vy, 1e-9), Some(rotor), "{rotor}");
        }
    }

    #[test]
    fn verdict_labels_round_trip() {
        for r in Rotor::ALL {
            let s = FaultStatus::failed_rotor(r, 1.0);
            assert_eq!(FaultStatus::parse_label(&s.label()).unwrap(), vec![r]);
        }
        assert!(FaultStatus::parse_label("healthy").unwrap().is_empty());
        assert!(FaultStatus::parse_label("FAILED_m7").is_err());
    }

    #[test]
    fn ftc_example() {
        let c = ftc_allocate(3.0, 4.0, 1.0, &[Rotor::M1], 10.0, LateralNorm::Euclidean).unwrap();
        assert_eq!(c.thrusts.as_array(), [0.0, 2.0, 3.0, 0.0]);
        assert_relative_eq!(c.psi_d, 0.927_295_218_001_612_2, epsilon = 1e-12);
        assert_eq!(c.off, Rotor::M4);
    }

    #[test]
    fn ftc_zero_command_is_idle() {
        let c = ftc_allocate(0.0, 0.0, 0.0, &[Rotor::M3], 1.0, LateralNorm::Euclidean).unwrap();
        assert_eq!(c.thrusts, MotorThrusts::ZERO);
    }

    #[test]
    fn ftc_abs_sum_reading() {
        let c = ftc_allocate(3.0, -4.0, 0.0, &[Rotor::M1], 10.0, LateralNorm::AbsSum).unwrap();
        assert_eq!(c.thrusts.as_array(), [0.0, 0.5, 0.5, 0.0]);
    }

    #[test]
    fn ftc_rejects_bad_fault_sets() {
        assert!(matches!(
            ftc_allocate(
                1.0,
                0.0,
                0.0,
                &[Rotor::M1, Rotor::M2],
                1.0,
                LateralNorm::Euclidean
            ),
            Err(Error::Unrecoverable(2))
        ));
        assert!(ftc_allocate(1.0, 0.0, 0.0, &[], 1.0, LateralNorm::Euclidean).is_err());
    }

    #[test]
    fn ftc_push_axis_matches_dynamics() {
        let p = params();
        for failed in Rotor::ALL {
            let c =
                ftc_allocate(0.1, 0.0, 0.0, &[failed], p.t_max, LateralNorm::Euclidean).unwrap();
            let (fx, fy) = c.thrusts.body_force();
            assert_relative_eq!(fy.atan2(fx), c.push_angle, epsilon = 1e-12);
            // surviving rotors sit in different diagonal pairs
            assert!(c.thrusts.q1() > 0.0 && c.thrusts.q2() > 0.0, "{failed}");
        }
    }

    proptest! {
        #[test]
        fn short_excursions_never_trigger(
            start in 0.0..3.0f64, len_frac in 0.0..0.99f64, dt in prop::sample::select(vec![0.002, 0.005, 0.01])
        ) {
            let cfg = config();
            let len = len_frac * cfg.window;
            let mut e = FaultEvidence::new(cfg.window);
            let n = (6.0 / dt) as usize;
            for i in 0..n {
                let t = i as f64 * dt;
                let s = if t >= start && t < start + len { faulty(t) } else { ResidualSample { t, ..Default::default() } };
                e.push(s).unwrap();
                prop_assert!(detect(&e, &cfg).is_healthy());
            }
        }

        #[test]
        fn ftc_outputs_bounded(ax in -1.0..1.0f64, ay in -1.0..1.0f64, tau in -1.0..1.0f64, r in 1usize..=4) {
            let rotor = Rotor::from_index(r).unwrap();
            let c = ftc_allocate(ax, ay, tau, &[rotor], 0.154, LateralNorm::Euclidean).unwrap();
            for m in c.thrusts.as_array() {
                prop_assert!((0.0..=0.154).contains(&m));
            }
            prop_assert_eq!(c.thrusts.get(r), 0.0);
            prop_assert_eq!(c.thrusts.get(c.off.index()), 0.0);
        }
    }
}
