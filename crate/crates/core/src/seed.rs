//! Child-seed derivation.
//!
//! Each stochastic stage draws its generator from `(master, stage, index)`
//! so that adding or reordering stages never shifts another stage's stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StageRng = ChaCha8Rng;

pub fn derive_seed(master: u64, stage: &str, index: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update((stage.len() as u64).to_le_bytes());
    hasher.update(stage.as_bytes());
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn rng_from_seed(seed: u64) -> StageRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stage_rng(master: u64, stage: &str, index: u64) -> StageRng {
    rng_from_seed(derive_seed(master, stage, index))
}
