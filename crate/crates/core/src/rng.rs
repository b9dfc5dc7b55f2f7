//! Reproducible random streams.
//!
//! Every consumer derives its own ChaCha8 stream from a base seed plus a key path,
//! so results do not depend on evaluation order or thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Hash `base` and a sequence of key parts into a 256-bit seed.
pub fn derive_seed(base: u64, parts: &[&str]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    h.finalize().into()
}

pub fn stream(base: u64, parts: &[&str]) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(derive_seed(base, parts))
}

/// Canonical text form of a time used in stream keys (millisecond ticks).
pub fn time_key(t: f64) -> String {
    format!("{}", (t * 1000.0).round() as i64)
}

/// Settings for Monte-Carlo estimates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MonteCarloConfig {
    pub n: usize,
    pub seed: u64,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self { n: 1000, seed: 0 }
    }
}

/// Identity of one Monte-Carlo estimate: `(scene, track, issue time, horizon)`.
#[derive(Clone, Copy, Debug)]
pub struct StreamKey<'a> {
    pub scene_id: &'a str,
    pub track_id: &'a str,
    pub issue_time: f64,
    pub horizon: f64,
}

impl StreamKey<'_> {
    pub fn rng(&self, seed: u64, purpose: &str) -> ChaCha8Rng {
        stream(
            seed,
            &[
                purpose,
                self.scene_id,
                self.track_id,
                &time_key(self.issue_time),
                &time_key(self.horizon),
            ],
        )
    }
}
