//! Motor thrust curve, battery lifetime and balloon sizing.

use std::io::Read;

use crate::error::{Error, Result};

pub const G: f64 = 9.81;
/// Dry air at 20 C, sea level, kg/m^3.
pub const RHO_AIR: f64 = 1.204;
/// Helium at 20 C, sea level, kg/m^3.
pub const RHO_HELIUM: f64 = 0.1664;

/// PWM to thrust.
///
/// The default is RPM proportional to PWM and thrust proportional to RPM^2,
/// pinned at `thrust(pwm_max) = thrust_max`. A lookup table, when present,
/// replaces it and is interpolated linearly.
#[derive(Debug, Clone, PartialEq)]
pub struct MotorCurve {
    pub pwm_max: f64,
    pub thrust_max: f64,
    pub rpm_max: f64,
    table: Option<Vec<(f64, f64)>>,
}

impl Default for MotorCurve {
    fn default() -> Self {
        Self {
            pwm_max: 255.0,
            // 15.7 g-force
            thrust_max: 0.0157 * G,
            rpm_max: 26_000.0,
            table: None,
        }
    }
}

impl MotorCurve {
    pub fn new(pwm_max: f64, thrust_max: f64, rpm_max: f64) -> Result<Self> {
        for (name, v) in [
            ("pwm_max", pwm_max),
            ("thrust_max", thrust_max),
            ("rpm_max", rpm_max),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be > 0, got {v}"),
                });
            }
        }
        Ok(Self {
            pwm_max,
            thrust_max,
            rpm_max,
            table: None,
        })
    }

    /// Replaces the parametric form with `(pwm, thrust_n)` points.
    ///
    /// The table must start at `(0, 0)`, have strictly increasing PWM and
    /// non-decreasing thrust. Its last point sets `pwm_max` and `thrust_max`.
    pub fn with_table(mut self, table: Vec<(f64, f64)>) -> Result<Self> {
        validate_table(&table)?;
        let &(pwm_max, thrust_max) = table.last().expect("validated non-empty");
        self.pwm_max = pwm_max;
        self.thrust_max = thrust_max;
        self.table = Some(table);
        Ok(self)
    }

    /// Reads a `pwm,thrust_n` CSV with header.
    pub fn table_from_csv<R: Read>(reader: R) -> Result<Vec<(f64, f64)>> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "pwm" || &headers[1] != "thrust_n" {
            return Err(Error::Parse {
                line: 1,
                message: format!(
                    "expected header `pwm,thrust_n`, got `{}`",
                    headers.iter().collect::<Vec<_>>().join(",")
                ),
            });
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
            let field = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.parse::<f64>().ok())
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        line,
                        message: format!("column {} is not a number", i + 1),
                    })
            };
            rows.push((field(0)?, field(1)?));
        }
        validate_table(&rows)?;
        Ok(rows)
    }

    pub fn table(&self) -> Option<&[(f64, f64)]> {
        self.table.as_deref()
    }

    pub fn rpm_from_pwm(&self, pwm: f64) -> Result<f64> {
        self.check_pwm(pwm)?;
        Ok(self.rpm_max * pwm / self.pwm_max)
    }

    pub fn thrust_from_pwm(&self, pwm: f64) -> Result<f64> {
        self.check_pwm(pwm)?;
        if let Some(table) = &self.table {
            let i = table.partition_point(|&(p, _)| p <= pwm);
            if i >= table.len() {
                return Ok(table[table.len() - 1].1);
            }
            let (p0, t0) = table[i - 1];
            let (p1, t1) = table[i];
            return Ok(t0 + (t1 - t0) * (pwm - p0) / (p1 - p0));
        }
        let u = pwm / self.pwm_max;
        Ok(self.thrust_max * u * u)
    }

    fn check_pwm(&self, pwm: f64) -> Result<()> {
        if !(0.0..=self.pwm_max).contains(&pwm) {
            return Err(Error::Domain(format!(
                "pwm {pwm} outside [0, {}]",
                self.pwm_max
            )));
        }
        Ok(())
    }
}

fn validate_table(table: &[(f64, f64)]) -> Result<()> {
    let bad = |message: String| Error::InvalidParameter {
        name: "motor table",
        reason: message,
    };
    match table.first() {
        None => return Err(bad("empty".into())),
        Some(&(p, t)) if p != 0.0 || t != 0.0 => {
            return Err(bad(format!("must start at (0, 0), got ({p}, {t})")))
        }
        _ => {}
    }
    if table.len() < 2 {
        return Err(bad("needs at least two points".into()));
    }
    for w in table.windows(2) {
        if !(w[1].0 > w[0].0) {
            return Err(bad(format!("pwm not strictly increasing at {}", w[1].0)));
        }
        if w[1].1 < w[0].1 {
            return Err(bad(format!("thrust decreases at pwm {}", w[1].0)));
        }
    }
    Ok(())
}

/// Currents in mA, capacity in mAh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryModel {
    pub capacity_mah: f64,
    pub voltage: f64,
    /// Radio and compute.
    pub i_idle: f64,
    /// Per motor at full thrust.
    pub i_motor_full: f64,
    /// Extra draw while actively holding heading.
    pub i_heading_overhead: f64,
}

/// Reference endurance numbers: full-duty with and without heading hold and
/// the two duty-cycled modes.
pub const FULL_DUTY_HEADING_MIN: f64 = 16.7;
pub const FULL_DUTY_FREE_MIN: f64 = 22.7;
pub const CYCLED_HEADING_MIN: f64 = 60.2;
pub const CYCLED_FREE_MIN: f64 = 81.6;
pub const QUAD_BASELINE_MIN: f64 = 6.6;

/// Assumed radio plus compute draw. Must stay below the margin the cycled
/// heading-hold anchor leaves; see [`BatteryFit`].
pub const DEFAULT_I_IDLE_MA: f64 = 8.0;

impl BatteryModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("battery.capacity_mah", self.capacity_mah),
            ("battery.voltage", self.voltage),
            ("battery.i_idle", self.i_idle),
            ("battery.i_motor_full", self.i_motor_full),
            ("battery.i_heading_overhead", self.i_heading_overhead),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::ConfigKey(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Default 300 mAh, 4.2 V pack with currents fitted to the endurance anchors.
    pub fn fitted() -> Self {
        fit_battery(300.0, 4.2, DEFAULT_I_IDLE_MA, 4)
            .expect("default anchors are consistent")
            .model
    }

    /// A conventional quadrotor on the same pack: the motors carry the whole
    /// weight, so full-duty draw is what gives 6.6 min.
    pub fn quad_baseline() -> Self {
        let base = Self::fitted();
        let total = base.capacity_mah * 60.0 / QUAD_BASELINE_MIN;
        Self {
            i_motor_full: (total - base.i_idle - base.i_heading_overhead) / 4.0,
            ..base
        }
    }

    /// Instantaneous draw in mA.
    pub fn current_ma(&self, duty: f64, heading_hold: bool, active_motors: u32) -> f64 {
        self.i_idle
            + if heading_hold {
                self.i_heading_overhead
            } else {
                0.0
            }
            + duty * active_motors as f64 * self.i_motor_full
    }
}

pub fn lifetime_minutes(
    duty: f64,
    heading_hold: bool,
    battery: &BatteryModel,
    active_motors: u32,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&duty) {
        return Err(Error::Domain(format!("duty {duty} outside [0, 1]")));
    }
    Ok(battery.capacity_mah * 60.0 / battery.current_ma(duty, heading_hold, active_motors))
}

/// Battery currents recovered from the endurance anchors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryFit {
    pub model: BatteryModel,
    /// Motor duty implied by the cycled heading-hold anchor.
    pub duty_heading: f64,
    /// Motor duty implied by the cycled free-heading anchor.
    pub duty_free: f64,
}

/// Fits currents to the reference endurance numbers.
///
/// The two full-duty anchors fix the heading overhead and `i_idle + n i_motor`;
/// `i_idle` is an input because four anchors with two unknown duties leave one
/// degree of freedom. The duties of the cycled anchors are then solved for.
pub fn fit_battery(
    capacity_mah: f64,
    voltage: f64,
    i_idle: f64,
    motors: u32,
) -> Result<BatteryFit> {
    let total = |minutes: f64| capacity_mah * 60.0 / minutes;
    let overhead = total(FULL_DUTY_HEADING_MIN) - total(FULL_DUTY_FREE_MIN);
    let motors_full = total(FULL_DUTY_FREE_MIN) - i_idle;
    if !(i_idle > 0.0) || motors_full <= 0.0 {
        return Err(Error::Domain(format!(
            "i_idle {i_idle} mA inconsistent with anchors"
        )));
    }
    let n = motors as f64;
    let model = BatteryModel {
        capacity_mah,
        voltage,
        i_idle,
        i_motor_full: motors_full / n,
        i_heading_overhead: overhead,
    };
    model.validate()?;
    let duty_heading = (total(CYCLED_HEADING_MIN) - i_idle - overhead) / motors_full;
    let duty_free = (total(CYCLED_FREE_MIN) - i_idle) / motors_full;
    for d in [duty_heading, duty_free] {
        if !(0.0..=1.0).contains(&d) {
            return Err(Error::Domain(format!(
                "i_idle {i_idle} mA implies duty {d} outside [0, 1]"
            )));
        }
    }
    Ok(BatteryFit {
        model,
        duty_heading,
        duty_free,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalloonSpec {
    pub rho_air: f64,
    pub rho_helium: f64,
    pub envelope_mass_per_m2: f64,
    pub payload: f64,
}

/// 25.9 g envelope for a 90 cm balloon.
pub fn envelope_areal_density() -> f64 {
    0.0259 / (std::f64::consts::PI * 0.9 * 0.9)
}

impl BalloonSpec {
    pub fn standard(payload: f64) -> Self {
        Self {
            rho_air: RHO_AIR,
            rho_helium: RHO_HELIUM,
            envelope_mass_per_m2: envelope_areal_density(),
            payload,
        }
    }

    pub fn massless(payload: f64) -> Self {
        Self {
            envelope_mass_per_m2: 0.0,
            ..Self::standard(payload)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho_air > self.rho_helium && self.rho_helium > 0.0 && self.rho_air.is_finite()) {
            return Err(Error::Domain(format!(
                "need rho_air > rho_helium > 0, got {} and {}",
                self.rho_air, self.rho_helium
            )));
        }
        if !(self.envelope_mass_per_m2 >= 0.0 && self.envelope_mass_per_m2.is_finite()) {
            return Err(Error::Domain("envelope mass per m^2 must be >= 0".into()));
        }
        if !(self.payload >= 0.0 && self.payload.is_finite()) {
            return Err(Error::Domain(format!(
                "payload must be >= 0, got {}",
                self.payload
            )));
        }
        Ok(())
    }

    /// Lift minus envelope mass for a sphere of `volume` m^3, in kg.
    pub fn net_lift_kg(&self, volume: f64) -> f64 {
        let d = sphere_diameter(volume);
        (self.rho_air - self.rho_helium) * volume
            - self.envelope_mass_per_m2 * std::f64::consts::PI * d * d
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalloonSize {
    pub volume_l: f64,
    pub diameter_m: f64,
}

pub fn sphere_diameter(volume: f64) -> f64 {
    (6.0 * volume / std::f64::consts::PI).cbrt()
}

/// Smallest sphere whose net lift carries `spec.payload`.
///
/// Iterates `d <- cbrt(6 (payload + s pi d^2) / (pi drho))` from below the
/// root; the map is increasing and contracts there, so the sequence rises
/// monotonically to the answer.
pub fn size_balloon(spec: &BalloonSpec) -> Result<BalloonSize> {
    use std::f64::consts::PI;
    spec.validate()?;
    let drho = spec.rho_air - spec.rho_helium;
    let sigma = spec.envelope_mass_per_m2;
    if spec.payload == 0.0 {
        return Ok(BalloonSize {
            volume_l: 0.0,
            diameter_m: 0.0,
        });
    }
    let g = |d: f64| (6.0 * (spec.payload + sigma * PI * d * d) / (PI * drho)).cbrt();
    let mut d = g(0.0).max(6.0 * sigma / drho);
    for _ in 0..100_000 {
        let next = g(d);
        if (next - d).abs() < 1e-12 * next.max(1.0) {
            let volume = PI * next.powi(3) / 6.0;
            return Ok(BalloonSize {
                volume_l: volume * 1000.0,
                diameter_m: next,
            });
        }
        if !next.is_finite() {
            break;
        }
        d = next;
    }
    Err(Error::Domain(format!(
        "no balloon found for payload {} kg",
        spec.payload
    )))
}

/// Ballast mass that brings `lift` down to `platform_weight`, kg.
pub fn ballast_trim(lift_n: f64, platform_weight_n: f64) -> Result<f64> {
    crate::error::ensure_finite("ballast inputs", &[lift_n, platform_weight_n])?;
    if lift_n < platform_weight_n {
        return Err(Error::NegativeBallast {
            lift_n,
            weight_n: platform_weight_n,
        });
    }
    Ok((lift_n - platform_weight_n) / G)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn default_curve_endpoints() {
        let c = MotorCurve::default();
        assert_eq!(c.thrust_from_pwm(0.0).unwrap(), 0.0);
        assert_relative_eq!(c.thrust_from_pwm(c.pwm_max).unwrap(), 0.154, epsilon = 2e-4);
        assert_relative_eq!(
            c.thrust_from_pwm(0.5 * c.pwm_max).unwrap(),
            0.25 * c.thrust_max,
            epsilon = 1e-15
        );
        assert_eq!(c.rpm_from_pwm(c.pwm_max).unwrap(), 26_000.0);
        assert!(c.thrust_from_pwm(-1.0).is_err());
        assert!(c.thrust_from_pwm(c.pwm_max + 1.0).is_err());
    }

    #[test]
    fn table_interpolates() {
        let c = MotorCurve::default()
            .with_table(vec![(0.0, 0.0), (100.0, 0.05), (200.0, 0.15)])
            .unwrap();
        assert_eq!(c.pwm_max, 200.0);
        assert_relative_eq!(c.thrust_from_pwm(50.0).unwrap(), 0.025, epsilon = 1e-15);
        assert_relative_eq!(c.thrust_from_pwm(150.0).unwrap(), 0.1, epsilon = 1e-15);
        assert_eq!(c.thrust_from_pwm(200.0).unwrap(), 0.15);
    }

    #[test]
    fn table_csv_validation() {
        let ok = "pwm,thrust_n\n0,0\n128,0.04\n255,0.154\n";
        assert_eq!(MotorCurve::table_from_csv(ok.as_bytes()).unwrap().len(), 3);
        let decreasing = "pwm,thrust_n\n0,0\n128,0.08\n255,0.05\n";
        assert!(MotorCurve::table_from_csv(decreasing.as_bytes()).is_err());
        let repeated = "pwm,thrust_n\n0,0\n128,0.04\n128,0.05\n";
        assert!(MotorCurve::table_from_csv(repeated.as_bytes()).is_err());
        let header = "a,b\n0,0\n";
        assert!(MotorCurve::table_from_csv(header.as_bytes()).is_err());
        let junk = "pwm,thrust_n\n0,0\n12,abc\n";
        assert!(matches!(
            MotorCurve::table_from_csv(junk.as_bytes()),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn lifetime_anchors() {
        let fit = fit_battery(300.0, 4.2, DEFAULT_I_IDLE_MA, 4).unwrap();
        let b = fit.model;
        assert_relative_eq!(
            lifetime_minutes(1.0, true, &b, 4).unwrap(),
            16.7,
            epsilon = 1e-9
        );
        assert_relative_eq!(
            lifetime_minutes(1.0, false, &b, 4).unwrap(),
            22.7,
            epsilon = 1e-9
        );
        assert_relative_eq!(
            lifetime_minutes(fit.duty_heading, true, &b, 4).unwrap(),
            60.2,
            epsilon = 1e-9
        );
        assert_relative_eq!(
            lifetime_minutes(fit.duty_free, false, &b, 4).unwrap(),
            81.6,
            epsilon = 1e-9
        );
        assert!(fit.duty_heading < fit.duty_free);
        // radio and compute alone
        assert_relative_eq!(
            lifetime_minutes(0.0, false, &b, 4).unwrap(),
            300.0 * 60.0 / DEFAULT_I_IDLE_MA,
            epsilon = 1e-9
        );
    }

    #[test]
    fn quad_baseline() {
        let q = BatteryModel::quad_baseline();
        assert_relative_eq!(
            lifetime_minutes(1.0, true, &q, 4).unwrap(),
            6.6,
            epsilon = 1e-9
        );
    }

    #[test]
    fn idle_too_large_is_rejected() {
        assert!(fit_battery(300.0, 4.2, 20.0, 4).is_err());
    }

    #[test]
    fn balloon_for_table_stack() {
        let s = size_balloon(&BalloonSpec::massless(0.1262)).unwrap();
        assert_relative_eq!(s.volume_l, 121.6, epsilon = 0.05);
        assert_relative_eq!(s.diameter_m, 0.615, epsilon = 5e-4);
        let s = size_balloon(&BalloonSpec::massless(0.0)).unwrap();
        assert_eq!(s.volume_l, 0.0);
    }

    #[test]
    fn balloon_rejects_inverted_densities() {
        let spec = BalloonSpec {
            rho_helium: 1.3,
            ..BalloonSpec::standard(0.1)
        };
        assert!(size_balloon(&spec).is_err());
    }

    #[test]
    fn balloon_curve_monotone_convex() {
        let ds: Vec<f64> = (0..=50)
            .map(|i| {
                size_balloon(&BalloonSpec::standard(i as f64 * 0.01))
                    .unwrap()
                    .diameter_m
            })
            .collect();
        for w in ds.windows(2) {
            assert!(w[1] > w[0]);
        }
        // diameter grows ever more slowly with payload
        for w in ds[1..].windows(3) {
            assert!(w[2] - w[1] < w[1] - w[0]);
        }
    }

    #[test]
    fn ballast() {
        assert_eq!(ballast_trim(1.0, 1.0).unwrap(), 0.0);
        assert_relative_eq!(ballast_trim(1.0981, 1.0).unwrap(), 0.010, epsilon = 1e-12);
        let w = 0.1262 * G;
        assert!(ballast_trim(w, (0.0688 + 0.0574) * G).unwrap().abs() < 1e-15);
        assert!(matches!(
            ballast_trim(0.5, 1.0),
            Err(Error::NegativeBallast { .. })
        ));
    }

    proptest! {
        #[test]
        fn lifetime_decreases(d1 in 0.0..1.0f64, dd in 1e-6..1.0f64, n in 1u32..4, h in any::<bool>()) {
            let b = BatteryModel::fitted();
            let d2 = (d1 + dd).min(1.0);
            prop_assume!(d2 > d1);
            prop_assert!(lifetime_minutes(d2, h, &b, n).unwrap() < lifetime_minutes(d1, h, &b, n).unwrap());
            if d1 > 0.0 {
                prop_assert!(lifetime_minutes(d1, h, &b, n + 1).unwrap() < lifetime_minutes(d1, h, &b, n).unwrap());
            }
        }

        #[test]
        fn balloon_lift_round_trip(payload in 0.001..0.5f64, sigma in 0.0..0.05f64) {
            let spec = BalloonSpec { envelope_mass_per_m2: sigma, ..BalloonSpec::standard(payload) };
            let s = size_balloon(&spec).unwrap();
            prop_assert!((spec.net_lift_kg(s.volume_l / 1000.0) - payload).abs() < 1e-6);
        }

        #[test]
        fn any_valid_table_is_monotone(steps in prop::collection::vec((0.1..50.0f64, 0.0..0.05f64), 1..20), q in 0.0..1.0f64, r in 0.0..1.0f64) {
            let mut table = vec![(0.0, 0.0)];
            for (dp, dt) in steps {
                let &(p, t) = table.last().unwrap();
                table.push((p + dp, t + dt));
            }
            let c = MotorCurve::default().with_table(table).unwrap();
            let (a, b) = if q < r { (q, r) } else { (r, q) };
            prop_assert!(c.thrust_from_pwm(a * c.pwm_max).unwrap() <= c.thrust_from_pwm(b * c.pwm_max).unwrap());
        }
    }
}
