#![allow(dead_code)]

use buoyquad_core::Scenario;

pub const NOISE_KEYS: [&str; 5] = [
    "sensors.imu_accel_sigma",
    "sensors.imu_gyro_sigma",
    "sensors.imu_gyro_bias",
    "sensors.tof_sigma",
    "sensors.flow_sigma",
];

pub fn config(name: &str) -> Scenario {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(format!("{name}.cfg"));
    Scenario::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn noise_free(s: &Scenario) -> Scenario {
    NOISE_KEYS.iter().fold(s.clone(), |s, k| {
        s.with_override(k, "0").expect("noise key")
    })
}

pub fn with(s: &Scenario, key: &str, value: impl ToString) -> Scenario {
    s.with_override(key, &value.to_string()).expect("override")
}
