//! Deterministic random streams keyed by (seed, indices).
//!
//! Every stochastic step draws from a stream derived from the master seed
//! and the indices identifying the step (frame, particle, beam, ...), so
//! results do not depend on evaluation order or thread count.

use rand::SeedableRng;
use rand_pcg::Pcg64Mcg;

pub type StreamRng = Pcg64Mcg;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a seed with a path of indices into a new 64-bit seed.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn stream(seed: u64, path: &[u64]) -> StreamRng {
    let s = derive_seed(seed, path);
    StreamRng::new(((s as u128) << 64) | splitmix64(s ^ 0xA5A5_A5A5) as u128 | 1)
}

/// Stream-name tags keeping unrelated consumers of one seed apart.
pub mod tag {
    pub const INIT: u64 = 1;
    pub const MOTION: u64 = 2;
    pub const RESAMPLE: u64 = 3;
    pub const SCAN: u64 = 10;
    pub const ODOM: u64 = 11;
    pub const WORLD: u64 = 12;
    pub const REFS: u64 = 13;
    pub const TLS: u64 = 20;
    pub const SLAM: u64 = 21;
    pub const PABC: u64 = 22;
}

#[allow(dead_code)]
fn _assert_seedable() -> StreamRng {
    StreamRng::seed_from_u64(0)
}
