//! Deterministic RNG streams.
//!
//! Every randomised stage derives its stream from the master seed plus a
//! context tag (stage name, repetition index, feature tuple, ...), so
//! parallel schedules cannot change results: each task owns its stream and
//! reductions are order-fixed.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Mix a master seed with context words into a child seed (splitmix64).
pub fn derive_seed(master: u64, context: &[u64]) -> u64 {
    let mut state = master ^ 0x9e37_79b9_7f4a_7c15;
    let mut mix = |v: u64| {
        state ^= v.wrapping_add(0x9e37_79b9_7f4a_7c15);
        state = state.wrapping_mul(0xbf58_476d_1ce4_e5b9);
        state ^= state >> 27;
        state = state.wrapping_mul(0x94d0_49bb_1331_11eb);
        state ^= state >> 31;
    };
    for &word in context {
        mix(word);
    }
    mix(context.len() as u64 + 1);
    state
}

/// Seeded stream for a (master seed, context) pair.
pub fn stream(master: u64, context: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, context))
}

/// Stable tag for string context (FNV-1a).
pub fn tag(s: &str) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for b in s.as_bytes() {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x100_0000_01b3);
    }
    hash
}
