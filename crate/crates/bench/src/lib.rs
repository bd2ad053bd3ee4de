//! Benchmark fixtures shared by the criterion targets.

use vigilance_core::GameConfig;

/// The reference single-greedy, single-vigilante game.
pub fn reference(rho: f64) -> GameConfig {
    GameConfig::single(10, 10.0, rho).expect("reference configuration is valid")
}
