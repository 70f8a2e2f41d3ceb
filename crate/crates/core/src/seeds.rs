//! Expansion of one master seed into independent streams.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub master: u64,
    pub init: u64,
    pub oov: u64,
    pub schedule: u64,
    pub subsample: u64,
}

impl Seeds {
    pub fn from_master(master: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master);
        Seeds {
            master,
            init: rng.next_u64(),
            oov: rng.next_u64(),
            schedule: rng.next_u64(),
            subsample: rng.next_u64(),
        }
    }
}

/// Deterministic child seed for a labeled purpose.
pub fn derive(seed: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(label.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().unwrap())
}

/// Generator for initializing one named module, independent of every other module.
pub fn module_rng(init_seed: u64, module: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(init_seed, module))
}
