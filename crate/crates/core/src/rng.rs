//! Keyed deterministic random streams.
//!
//! Each stream is a ChaCha8 generator whose 256-bit key is the SHA-256 of
//! `(global_seed, image_id, stream_index)`. ChaCha is counter based, so the
//! draw counter is the generator's block position: the same key always
//! yields the same sequence regardless of which thread consumes it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(global_seed: u64, image_id: &str, stream_index: u64) -> Self {
        let mut h = Sha256::new();
        h.update(b"forge-stream-v1");
        h.update(global_seed.to_le_bytes());
        h.update((image_id.len() as u64).to_le_bytes());
        h.update(image_id.as_bytes());
        h.update(stream_index.to_le_bytes());
        let key: [u8; 32] = h.finalize().into();
        RandomStream {
            rng: ChaCha8Rng::from_seed(key),
        }
    }

    /// Uniform in `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform in `[lo, hi)` (or exactly `lo` when `lo == hi`).
    #[inline]
    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal via Box–Muller.
    pub fn gaussian(&mut self) -> f64 {
        // 1 - u lies in (0, 1], keeping ln finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.random::<u64>()
    }
}
