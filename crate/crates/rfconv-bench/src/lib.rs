//! Shared fixtures for the benchmarks.

use rfconv::{preset, ModelParams};

/// The proportional-regime parameters used throughout the benches.
pub fn proportional(activation: &str, tau_sq: f64) -> ModelParams {
    let profile = preset(activation, rfconv::DEFAULT_QUAD_ORDER).expect("known activation");
    ModelParams::new(2.5, 1.5, 1.0, tau_sq, profile).expect("valid parameters")
}
