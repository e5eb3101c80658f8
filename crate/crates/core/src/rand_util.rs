//! Small sampling helpers over any `rand_core` generator.

use rand_core::Rng;

/// Uniform draw from `[0, bound)` by rejection. `bound` must be nonzero.
pub(crate) fn uniform_u64(rng: &mut dyn Rng, bound: u64) -> u64 {
    debug_assert!(bound > 0);
    if bound.is_power_of_two() {
        return rng.next_u64() & (bound - 1);
    }
    let zone = u64::MAX - (u64::MAX % bound);
    loop {
        let v = rng.next_u64();
        if v < zone {
            return v % bound;
        }
    }
}

/// Derive an independent substream seed from a base seed and an index.
/// SplitMix64 finalizer, so nearby indices map to unrelated seeds.
pub(crate) fn substream_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
