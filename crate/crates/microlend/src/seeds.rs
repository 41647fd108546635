//! Deterministic seed derivation.
//!
//! Every random stream in the crate is derived from a single top-level 64-bit
//! seed plus a tag path, so runs are reproducible regardless of thread
//! scheduling or evaluation order.

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derive a child seed from `base` and a tag path.
///
/// Distinct tag paths give statistically independent streams.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let mut state = splitmix64(base);
    for &tag in tags {
        state = splitmix64(state ^ splitmix64(tag));
    }
    state
}
