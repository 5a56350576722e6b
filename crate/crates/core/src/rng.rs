//! Seeded ChaCha8 streams.
//!
//! Every random object is a pure function of `(seed, stream)`. Replications use
//! the replication index as the stream, so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derive an independent seed for a sub-experiment (splitmix64 finaliser).
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform on (0,1]: `1 - U` with `U` uniform on [0,1).
pub fn unit_open_closed(rng: &mut Rng) -> f64 {
    use rand::Rng as _;
    1.0 - rng.random::<f64>()
}
