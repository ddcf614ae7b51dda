//! Deterministic seed derivation.
//!
//! Every stochastic component derives its seed as a pure function of the
//! master seed and a label path, so any experiment cell can be re-run in
//! isolation and parallel scheduling cannot change results.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; stable across platforms and releases.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and a sequence of labels.
///
/// Labels are mixed in order, so `derive(s, &["a"])` and `derive(s, &["b"])`
/// give independent streams while remaining pure functions of the inputs.
pub fn derive(master: u64, labels: &[&str]) -> u64 {
    let mut state = mix(master);
    for label in labels {
        for b in label.as_bytes() {
            state = mix(state ^ u64::from(*b));
        }
        state = mix(state ^ 0xff);
    }
    state
}

/// Derive a child seed from numeric path components (model index, pi in
/// basis points, iteration, instance, ...).
pub fn derive_n(master: u64, parts: &[u64]) -> u64 {
    let mut state = mix(master);
    for p in parts {
        state = mix(state ^ *p);
    }
    state
}

/// Seeded RNG used everywhere in the crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
