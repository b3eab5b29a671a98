//! Seeded, portable randomness.
//!
//! Every random choice in the pipeline comes from a ChaCha8 stream whose
//! 32-byte key is `SHA-256(seed as u64 little-endian || stage name as UTF-8)`.
//! ChaCha8 output is specified bit-for-bit, so a given `(seed, stage)` pair
//! yields the same selections on every platform, and each stage can be re-run
//! on its own without replaying the others.
//!
//! Sampling without replacement is a partial Fisher-Yates shuffle over
//! `0..n`: for `i` in `0..m`, draw `j` uniformly from `i..n` with
//! `Rng::random_range` and swap positions `i` and `j`. The first `m` slots
//! are the sample, in draw order.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StageRng = ChaCha8Rng;

pub fn stage_rng(seed: u64, stage: &str) -> StageRng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(stage.as_bytes());
    let key: [u8; 32] = hasher.finalize().into();
    ChaCha8Rng::from_seed(key)
}

/// Draws `m` distinct positions from `0..n`, in draw order.
///
/// Panics if `m > n`.
pub fn sample_indices<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> Vec<usize> {
    assert!(m <= n, "cannot sample {m} of {n} without replacement");
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..m {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(m);
    pool
}
