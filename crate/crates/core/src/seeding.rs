//! Deterministic seed derivation and RNG construction.
//!
//! Every trial draws from a ChaCha stream seeded by a pure function of the
//! experiment seed and the trial coordinates, so results do not depend on
//! scheduling order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// One round of the splitmix64 output function.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(GOLDEN);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Fixed splitting rule: root seed combined with a grid index and a trial
/// index yields the per-trial seed.
pub fn derive_seed(root: u64, grid_index: u64, trial_index: u64) -> u64 {
    let a = splitmix64(root ^ grid_index.wrapping_mul(GOLDEN));
    splitmix64(a ^ trial_index.wrapping_mul(GOLDEN))
}

/// A further split used to give independent streams to the different roles
/// inside one trial (ground truth, operator, noise, initialization).
pub fn derive_stream(seed: u64, role: u64) -> u64 {
    splitmix64(seed ^ role.wrapping_mul(GOLDEN))
}

/// Deterministic, platform-independent RNG for a derived seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
