//! Seeded RNG streams. All randomness in the artifact flows from one root
//! seed through named streams, so experiment layouts are frozen by the set of
//! labels used: `stream = ChaCha12(sha256(root_le_bytes || label))`.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

/// Derive the RNG stream for `label` under `root`. Stable across platforms
/// and releases (ChaCha12 keystreams are specified, unlike `StdRng`).
pub fn stream(root: u64, label: &str) -> ChaCha12Rng {
    let mut h = Sha256::new();
    h.update(root.to_le_bytes());
    h.update(label.as_bytes());
    let seed: [u8; 32] = h.finalize().into();
    ChaCha12Rng::from_seed(seed)
}
