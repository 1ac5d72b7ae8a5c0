//! Shared fixtures for the benchmarks.

use std::path::PathBuf;

use buoyquad_core::Scenario;

/// Loads one of the shipped scenario files by stem.
pub fn scenario(name: &str) -> Scenario {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(format!("{name}.cfg"));
    Scenario::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}
