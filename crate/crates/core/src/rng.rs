//! Seeded randomness.
//!
//! Every stochastic step in the pipeline draws from a [`ChaCha8Rng`] built
//! from an explicit 64-bit seed, so outputs are reproducible across
//! platforms and thread counts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type PipelineRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> PipelineRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive an independent stream seed from a base seed and a stream id
/// (splitmix64 finalizer over the pair).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(stream.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_seed_same_stream() {
        let (mut a, mut b) = (rng_from_seed(7), rng_from_seed(7));
        for _ in 0..4 {
            assert_eq!(a.gen::<u64>(), b.gen::<u64>());
        }
    }

    #[test]
    fn derived_streams_differ() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }
}
