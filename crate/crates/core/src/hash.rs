//! Stable 64-bit state digests.

use std::hash::Hasher;

use fnv::FnvHasher;

use crate::types::State;

/// FNV-1a over raw bytes.
pub fn fnv64(bytes: &[u8]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(bytes);
    h.finish()
}

/// Digest of the canonical JSON encoding of `state`. Semantically equal
/// states (e.g. the same blocks stacks listed in another order) hash equal.
pub fn hash_state(state: &State) -> u64 {
    let bytes = serde_json::to_vec(&state.canonical()).expect("states always serialize");
    fnv64(&bytes)
}
