//! Seeded randomness.
//!
//! Every random draw in the crate comes from ChaCha8 seeded with a `u64`, and
//! normal variates use the Ziggurat sampler of `rand_distr::StandardNormal`.
//! Both are fixed so that a seed reproduces the same numbers across runs,
//! platforms and thread counts.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes a master seed and a trial index into an independent stream seed
/// (SplitMix64 finalizer over the pair).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `rows × cols` matrix of i.i.d. standard normals, filled column by column.
pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(rows, cols);
    for v in out.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    out
}
