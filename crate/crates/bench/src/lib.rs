//! Fixtures shared by the engine benchmarks.

use decisive_core::{generate_synthetic_scenario, ChaCha8Rng, ElicitationConfig, ScoringMatrix};
use rand::SeedableRng;

pub const OPTIONS: usize = 10;
pub const FACTORS: usize = 11;
pub const PARTICLES: usize = 500;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A synthetic 10×11 matrix drawn from `seed`.
pub fn matrix(seed: u64) -> ScoringMatrix {
    generate_synthetic_scenario(OPTIONS, FACTORS, &mut rng(seed))
        .expect("benchmark shape is valid")
        .matrix
}

pub fn config() -> ElicitationConfig {
    ElicitationConfig { particle_count: PARTICLES, ..Default::default() }
}
