//! Deterministic seed derivation.
//!
//! Every randomized stage of the harness draws its seed from a single global
//! seed through [`derive_seed`], so a whole run is reproducible from one
//! number and independent stages never share RNG streams.

use sha2::{Digest, Sha256};

/// Derives a child seed from a base seed and a stage label.
///
/// The derivation is SHA-256 over the little-endian base seed followed by the
/// label bytes, truncated to the first eight bytes. Stable across platforms.
pub fn derive_seed(base: u64, label: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(base.to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has at least 8 bytes"))
}
