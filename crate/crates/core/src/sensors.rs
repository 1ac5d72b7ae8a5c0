//! Sensor models, wind and disturbance injection.
//!
//! Each channel samples at its own rate and holds its last value between
//! samples. Noise comes from a single seeded ChaCha stream per run so a
//! (scenario, seed) pair always replays the same readings.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dynamics::{StateDerivative, VehicleState};
use crate::error::{Error, Result};

/// Stream ids carved out of one run seed.
pub const SENSOR_STREAM: u64 = 1;
pub const WIND_STREAM: u64 = 2;

/// Seeded generator for one stream of one run.
pub fn run_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorSuite {
    pub imu_rate: f64,
    pub imu_accel_sigma: f64,
    pub imu_gyro_sigma: f64,
    pub imu_gyro_bias: f64,
    /// At most 50 Hz for the ranging part.
    pub tof_rate: f64,
    pub tof_sigma: f64,
    pub tof_max_range: f64,
    pub flow_rate: f64,
    pub flow_sigma: f64,
}

impl Default for SensorSuite {
    /// Noise-free suite at the default rates.
    fn default() -> Self {
        Self {
            imu_rate: 500.0,
            imu_accel_sigma: 0.0,
            imu_gyro_sigma: 0.0,
            imu_gyro_bias: 0.0,
            tof_rate: 50.0,
            tof_sigma: 0.0,
            tof_max_range: 4.0,
            flow_rate: 100.0,
            flow_sigma: 0.0,
        }
    }
}

impl SensorSuite {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sensors.imu_rate", self.imu_rate),
            ("sensors.tof_rate", self.tof_rate),
            ("sensors.flow_rate", self.flow_rate),
            ("sensors.tof_max_range", self.tof_max_range),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::ConfigKey(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.tof_rate > 50.0 {
            return Err(Error::ConfigKey(format!(
                "sensors.tof_rate must be <= 50 Hz, got {}",
                self.tof_rate
            )));
        }
        for (name, v) in [
            ("sensors.imu_accel_sigma", self.imu_accel_sigma),
            ("sensors.imu_gyro_sigma", self.imu_gyro_sigma),
            ("sensors.tof_sigma", self.tof_sigma),
            ("sensors.flow_sigma", self.flow_sigma),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::ConfigKey(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !self.imu_gyro_bias.is_finite() {
            return Err(Error::ConfigKey(
                "sensors.imu_gyro_bias must be finite".into(),
            ));
        }
        Ok(())
    }

    pub fn is_noise_free(&self) -> bool {
        self.imu_accel_sigma == 0.0
            && self.imu_gyro_sigma == 0.0
            && self.imu_gyro_bias == 0.0
            && self.tof_sigma == 0.0
            && self.flow_sigma == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SensorReading {
    pub t: f64,
    /// Body-frame acceleration, m/s^2 (gravity compensated, like the model).
    pub accel: Vector3<f64>,
    pub omega_z: f64,
    /// Height above the ground below; `None` when out of range.
    pub z_range: Option<f64>,
    /// Optic flow, body-frame lateral velocity, m/s.
    pub v_x: f64,
    pub v_y: f64,
    /// True on ticks where the ToF produced a fresh sample.
    pub tof_fresh: bool,
}

#[derive(Debug, Clone, Copy)]
struct Channel {
    period: f64,
    next: f64,
}

impl Channel {
    fn new(rate: f64) -> Self {
        Self {
            period: 1.0 / rate,
            next: 0.0,
        }
    }

    /// Due at `t` if the next sample instant has been reached. Sample
    /// instants stay on the channel's own grid.
    fn due(&mut self, t: f64) -> bool {
        if t + 1e-9 < self.next {
            return false;
        }
        while self.next <= t + 1e-9 {
            self.next += self.period;
        }
        true
    }
}

/// Stateful sensor front end for one run.
#[derive(Debug, Clone)]
pub struct Sensors {
    suite: SensorSuite,
    rng: ChaCha8Rng,
    imu: Channel,
    tof: Channel,
    flow: Channel,
    held: SensorReading,
    last_t: f64,
}

impl Sensors {
    pub fn new(suite: SensorSuite, seed: u64) -> Result<Self> {
        suite.validate()?;
        Ok(Self {
            imu: Channel::new(suite.imu_rate),
            tof: Channel::new(suite.tof_rate),
            flow: Channel::new(suite.flow_rate),
            suite,
            rng: run_rng(seed, SENSOR_STREAM),
            held: SensorReading::default(),
            last_t: f64::NEG_INFINITY,
        })
    }

    pub fn suite(&self) -> &SensorSuite {
        &self.suite
    }

    fn noise(&mut self, sigma: f64) -> f64 {
        let n: f64 = self.rng.sample(StandardNormal);
        sigma * n
    }

    /// Samples every channel that is due at `t` and returns the held reading.
    pub fn sense(
        &mut self,
        state: &VehicleState,
        true_accel: &StateDerivative,
        t: f64,
        ground_height_below: f64,
    ) -> Result<SensorReading> {
        if t < self.last_t {
            return Err(Error::Domain(format!(
                "sensor time went backwards: {t} after {}",
                self.last_t
            )));
        }
        self.last_t = t;
        let (s, c) = state.psi.sin_cos();
        let s_ = self.suite;

        if self.imu.due(t) {
            let bx = c * true_accel.a_x + s * true_accel.a_y;
            let by = -s * true_accel.a_x + c * true_accel.a_y;
            self.held.accel = Vector3::new(
                bx + self.noise(s_.imu_accel_sigma),
                by + self.noise(s_.imu_accel_sigma),
                true_accel.a_z + self.noise(s_.imu_accel_sigma),
            );
            self.held.omega_z = state.omega_z + s_.imu_gyro_bias + self.noise(s_.imu_gyro_sigma);
        }
        self.held.tof_fresh = false;
        if self.tof.due(t) {
            let range = state.z - ground_height_below + self.noise(s_.tof_sigma);
            self.held.z_range = (range <= s_.tof_max_range).then_some(range.max(0.0));
            self.held.tof_fresh = true;
        }
        if self.flow.due(t) {
            let bx = c * state.v_x + s * state.v_y;
            let by = -s * state.v_x + c * state.v_y;
            self.held.v_x = bx + self.noise(s_.flow_sigma);
            self.held.v_y = by + self.noise(s_.flow_sigma);
        }
        self.held.t = t;
        Ok(self.held)
    }
}

/// Replaces the yaw rate, as an impulsive yaw disturbance.
pub fn inject_spin(state: &VehicleState, rate: f64) -> VehicleState {
    VehicleState {
        omega_z: rate,
        ..*state
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WindModel {
    pub mean: Vector3<f64>,
    pub gust_amplitude: f64,
    /// Horizontal direction of the gust, rad from +x.
    pub gust_heading: f64,
    pub gust_start: f64,
    pub gust_duration: f64,
    /// Standard deviation of the colored component, m/s per axis.
    pub noise_sigma: f64,
    /// Correlation time of the colored component, s.
    pub noise_tau: f64,
}

impl WindModel {
    pub fn validate(&self) -> Result<()> {
        if !self.mean.iter().all(|v| v.is_finite()) || !self.gust_heading.is_finite() {
            return Err(Error::ConfigKey("wind values must be finite".into()));
        }
        for (name, v) in [
            ("wind.gust_amplitude", self.gust_amplitude),
            ("wind.gust_duration", self.gust_duration),
            ("wind.noise_sigma", self.noise_sigma),
            ("wind.noise_tau", self.noise_tau),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::ConfigKey(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.noise_sigma > 0.0 && self.noise_tau <= 0.0 {
            return Err(Error::ConfigKey(
                "wind.noise_tau must be > 0 when wind.noise_sigma > 0".into(),
            ));
        }
        Ok(())
    }

    /// Raised-cosine pulse, 0 outside `[start, start + duration]`.
    pub fn gust_envelope(&self, t: f64) -> f64 {
        if self.gust_duration <= 0.0 {
            return 0.0;
        }
        let u = (t - self.gust_start) / self.gust_duration;
        if !(0.0..=1.0).contains(&u) {
            return 0.0;
        }
        0.5 * (1.0 - (2.0 * std::f64::consts::PI * u).cos())
    }

    pub fn deterministic(&self, t: f64) -> Vector3<f64> {
        let g = self.gust_amplitude * self.gust_envelope(t);
        let (s, c) = self.gust_heading.sin_cos();
        self.mean + Vector3::new(g * c, g * s, 0.0)
    }
}

/// Wind for one run: the deterministic part plus an Ornstein-Uhlenbeck
/// component on the horizontal axes.
#[derive(Debug, Clone)]
pub struct WindField {
    model: WindModel,
    rng: ChaCha8Rng,
    colored: Vector3<f64>,
    last_t: Option<f64>,
}

impl WindField {
    pub fn new(model: WindModel, seed: u64) -> Result<Self> {
        model.validate()?;
        let mut rng = run_rng(seed, WIND_STREAM);
        let mut colored = Vector3::zeros();
        if model.noise_sigma > 0.0 {
            // start from the stationary distribution
            let nx: f64 = rng.sample(StandardNormal);
            let ny: f64 = rng.sample(StandardNormal);
            colored = Vector3::new(nx, ny, 0.0) * model.noise_sigma;
        }
        Ok(Self {
            model,
            rng,
            colored,
            last_t: None,
        })
    }

    pub fn sample(&mut self, t: f64) -> Result<Vector3<f64>> {
        if t < 0.0 {
            return Err(Error::Domain(format!("wind sampled at negative time {t}")));
        }
        if self.model.noise_sigma > 0.0 {
            if let Some(last) = self.last_t {
                let h = t - last;
                if h < 0.0 {
                    return Err(Error::Domain(format!(
                        "wind time went backwards: {t} after {last}"
                    )));
                }
                let decay = (-h / self.model.noise_tau).exp();
                let spread = self.model.noise_sigma * (1.0 - decay * decay).sqrt();
                let nx: f64 = self.rng.sample(StandardNormal);
                let ny: f64 = self.rng.sample(StandardNormal);
                self.colored = self.colored * decay + Vector3::new(nx, ny, 0.0) * spread;
            }
        }
        self.last_t = Some(t);
        Ok(self.model.deterministic(t) + self.colored)
    }
}

/// One-shot wind sample with a fresh stream; see [`WindField`] for runs.
pub fn sample_wind(t: f64, model: &WindModel, seed: u64) -> Result<Vector3<f64>> {
    WindField::new(*model, seed)?.sample(t)
}
