//! Repo-wide PRNG policy.
//!
//! Every stochastic routine in this workspace draws from ChaCha8 seeded
//! explicitly by the caller. One named, versioned generator keeps experiment
//! tables and tests bit-reproducible across runs and platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The single PRNG used throughout the workspace.
pub type Prng = ChaCha8Rng;

/// Name and version stamped into experiment outputs.
pub const PRNG_NAME: &str = "chacha8/rand_chacha-0.9";

/// A generator seeded from a plain integer seed.
pub fn seeded(seed: u64) -> Prng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A generator for sub-task `stream` of a top-level seed.
///
/// Streams let replicate trials, per-modality workers, and shuffles draw
/// independently without coordinating a shared generator. SplitMix64 mixing
/// keeps nearby (seed, stream) pairs statistically unrelated.
pub fn substream(seed: u64, stream: u64) -> Prng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(stream)))
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn seeded_is_deterministic() {
        let a: u64 = seeded(7).random();
        let b: u64 = seeded(7).random();
        assert_eq!(a, b);
    }

    #[test]
    fn substreams_differ() {
        let a: u64 = substream(7, 0).random();
        let b: u64 = substream(7, 1).random();
        assert_ne!(a, b);
    }
}
