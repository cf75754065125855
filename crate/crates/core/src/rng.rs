//! Seed derivation. Every random decision in a run is drawn from a ChaCha8
//! stream keyed by the master seed, the simulation index and the permutation
//! group index, so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of simulation `index` under `master`.
pub fn simulation_seed(master: u64, index: u64) -> u64 {
    mix64(master ^ mix64(index))
}

/// Seed reserved for auxiliary single shuffles (composition diagnostics).
pub fn auxiliary_seed(master: u64, tag: u64) -> u64 {
    mix64(mix64(master).wrapping_add(tag) ^ 0xA5A5_A5A5_A5A5_A5A5)
}

/// Independent stream for permutation group `group` under `seed`.
pub fn group_rng(seed: u64, group: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(group);
    rng
}

/// General-purpose generator for `seed` (synthetic data).
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
