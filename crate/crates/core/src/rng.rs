//! Seed splitting.
//!
//! Every random quantity in an experiment is drawn from a ChaCha8 stream whose
//! seed is `split(root, stream, index)`: the root seed of the experiment, a
//! stream tag naming the kind of draw (points, paths, null samples, ...), and
//! the index of the item inside that stream. The mixing function is SplitMix64,
//! so seeds for different items are decorrelated and independent of thread
//! scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const STREAM_POINTS: u64 = 1;
pub const STREAM_REFERENCE: u64 = 2;
pub const STREAM_PATHS: u64 = 3;
pub const STREAM_NULL: u64 = 4;
pub const STREAM_AUX: u64 = 5;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn split(root: u64, stream: u64, index: u64) -> u64 {
    splitmix(splitmix(splitmix(root) ^ stream.wrapping_mul(0xD1B5_4A32_D192_ED03)) ^ index)
}

pub fn stream_rng(root: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(split(root, stream, index))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distinct_and_stable() {
        let a = split(7, STREAM_POINTS, 0);
        assert_eq!(a, split(7, STREAM_POINTS, 0));
        assert_ne!(a, split(7, STREAM_POINTS, 1));
        assert_ne!(a, split(7, STREAM_PATHS, 0));
        assert_ne!(a, split(8, STREAM_POINTS, 0));
    }
}
