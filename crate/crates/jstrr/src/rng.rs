//! Seeded, splittable random streams.
//!
//! Every stochastic component takes an explicit `u64` seed and derives its
//! own ChaCha8 stream from it, so runs are reproducible and independent
//! units (documents, particles, folds, grid points) can execute in any
//! order, including in parallel, without changing results.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout: ChaCha with 8 rounds, seeded explicitly.
pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent child seed from `(seed, index)` with a SplitMix64
/// finalizer. Nested calls split streams further.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    mix64(mix64(seed).wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Inverse-CDF draw over an unnormalized weight table with a single uniform
/// variate. Cells with zero weight are never selected. Returns `None` when
/// the table has no positive mass.
pub fn draw_categorical(rng: &mut SeededRng, weights: &[f64]) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = None;
    for (k, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        last = Some(k);
        acc += w;
        if u < acc {
            return Some(k);
        }
    }
    // Floating-point slack at the upper boundary.
    last
}
