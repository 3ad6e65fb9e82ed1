//! Deterministic random-stream derivation.
//!
//! Every source of randomness in a run is a ChaCha8 stream derived from the
//! run's master seed and a fixed textual label, one stream per party/role.
//! The derivation is pure, so a run is a function of (config, master_seed)
//! alone, and adding an eavesdropper (who draws from her own stream) leaves
//! every honest party's draws untouched.
//!
//! Published rule:
//!   stream(master, label) = ChaCha8(SHA-256(LE64(master) || ":" || label))
//!   sub_master(master, label) = LE64 prefix of that digest
//!   trial master for trial t  = master_seed wrapping-add t

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

fn digest(master: u64, label: &str) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(b":");
    hasher.update(label.as_bytes());
    hasher.finalize().into()
}

/// The ChaCha8 stream for `label` under `master`.
pub fn stream(master: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(digest(master, label))
}

/// A derived master seed for a nested run, domain-separated by `label`.
pub fn sub_master(master: u64, label: &str) -> u64 {
    let d = digest(master, label);
    u64::from_le_bytes(d[..8].try_into().expect("digest has 8+ bytes"))
}

/// Master seed for the `trial`-th trial of a batch.
pub fn trial_master(master: u64, trial: u64) -> u64 {
    master.wrapping_add(trial)
}
