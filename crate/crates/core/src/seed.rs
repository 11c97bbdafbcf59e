//! Per-module seeds derived from one master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// First 8 bytes (little-endian) of `sha256(master_le_bytes ++ module)`.
pub fn derive_seed(master: u64, module: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(module.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

/// Generator for `module`, seeded from the master seed.
pub fn module_rng(master: u64, module: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, module))
}
