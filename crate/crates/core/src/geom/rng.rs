//! Keyed deterministic random streams.
//!
//! Every random draw in the toolkit comes from a stream keyed by
//! `(master_seed, object_id, kind_tag)`. The key is hashed with SHA-256 into
//! a ChaCha8 seed, so identical keys give identical sequences on every
//! platform, independent of thread count or scheduling.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Identity of a random stream.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub master_seed: u64,
    pub object_id: String,
    pub kind_tag: String,
}

impl StreamKey {
    pub fn new(master_seed: u64, object_id: impl Into<String>, kind_tag: impl Into<String>) -> Self {
        Self {
            master_seed,
            object_id: object_id.into(),
            kind_tag: kind_tag.into(),
        }
    }

    /// Key of a sub-stream, e.g. one stage of a composite corruption.
    pub fn child(&self, tag: &str) -> Self {
        Self {
            master_seed: self.master_seed,
            object_id: self.object_id.clone(),
            kind_tag: format!("{}/{}", self.kind_tag, tag),
        }
    }

    fn digest(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(self.master_seed.to_le_bytes());
        for s in [&self.object_id, &self.kind_tag] {
            h.update((s.len() as u64).to_le_bytes());
            h.update(s.as_bytes());
        }
        let mut out = [0u8; 32];
        out.copy_from_slice(&h.finalize());
        out
    }

    /// 64-bit summary of the derived seed, suitable for manifests.
    pub fn seed_u64(&self) -> u64 {
        let d = self.digest();
        u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
    }

    pub fn stream(&self) -> RngStream {
        RngStream::new(self.clone())
    }
}

/// A random stream derived from a [`StreamKey`].
#[derive(Debug, Clone)]
pub struct RngStream {
    key: StreamKey,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(key: StreamKey) -> Self {
        let rng = ChaCha8Rng::from_seed(key.digest());
        Self { key, rng }
    }

    /// Shorthand for `StreamKey::new(..).stream()`.
    pub fn from_parts(master_seed: u64, object_id: &str, kind_tag: &str) -> Self {
        StreamKey::new(master_seed, object_id, kind_tag).stream()
    }

    pub fn key(&self) -> &StreamKey {
        &self.key
    }

    /// Fresh stream for a sub-task, independent of how much of `self` was consumed.
    pub fn child(&self, tag: &str) -> Self {
        Self::new(self.key.child(tag))
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
