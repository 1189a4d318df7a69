//! Counter-based random streams.
//!
//! Every draw in the crate comes from a generator keyed by
//! `(seed, domain, index)`, so results never depend on execution order or
//! worker count. The same key always yields the same stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Stream domains, kept distinct so that e.g. Brownian draws never collide
/// with initial-condition draws under the same user seed.
pub mod domain {
    pub const BROWNIAN: u64 = 0x01;
    pub const INITIAL_CONDITION: u64 = 0x02;
    pub const FIELD_SAMPLING: u64 = 0x03;
    pub const GENERICITY_TRIAL: u64 = 0x04;
    pub const COLLAPSE_ORACLE: u64 = 0x05;
    pub const TEST_POINTS: u64 = 0x06;
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A ChaCha8 generator keyed by `(seed, domain, index)`.
pub fn substream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut state = seed ^ 0xA076_1D64_78BD_642F;
    let mut key = [0u8; 32];
    let a = splitmix64(&mut state);
    state ^= domain.wrapping_mul(0xE703_7ED1_A0B4_28DB);
    let b = splitmix64(&mut state);
    state ^= index.wrapping_mul(0x8EBC_6AF0_9C88_C6E3);
    let c = splitmix64(&mut state);
    let d = splitmix64(&mut state);
    key[0..8].copy_from_slice(&a.to_le_bytes());
    key[8..16].copy_from_slice(&b.to_le_bytes());
    key[16..24].copy_from_slice(&c.to_le_bytes());
    key[24..32].copy_from_slice(&d.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// The `count` standard normal draws attached to one integration step.
///
/// Draw `k` of step `m` is the Brownian coordinate of noise field `k`; scaling
/// by `sqrt(dt)` is the caller's job.
pub fn step_normals(seed: u64, step: u64, count: usize) -> Vec<f64> {
    let mut rng = substream(seed, domain::BROWNIAN, step);
    (0..count).map(|_| StandardNormal.sample(&mut rng)).collect()
}
