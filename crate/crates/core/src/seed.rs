//! Seed derivation for reproducible, schedule-independent randomness.
//!
//! Every random object in the crate is a pure function of a 64-bit seed. When
//! one master seed has to fan out (per edge, per Monte Carlo trial, per
//! Lanczos restart) the child seed is obtained by folding the stream labels
//! into the master seed with the SplitMix64 finaliser:
//!
//! ```text
//! h_0     = mix(master ^ 0x9E3779B97F4A7C15)
//! h_{k+1} = mix(h_k ^ mix(label_k + 0x9E3779B97F4A7C15 * (k + 1)))
//! ```
//!
//! The mapping depends only on the labels, never on the order in which work
//! items are scheduled, so parallel and serial runs draw identical streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
#[inline]
pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `master` and a list of stream labels.
pub fn derive_seed(master: u64, labels: &[u64]) -> u64 {
    let mut h = mix(master ^ GOLDEN);
    for (k, &label) in labels.iter().enumerate() {
        let salt = GOLDEN.wrapping_mul(k as u64 + 1);
        h = mix(h ^ mix(label.wrapping_add(salt)));
    }
    h
}

/// Stream labels used across the crate, kept distinct so that e.g. the
/// structural draws of a plant never share a stream with its perturbations.
pub mod stream {
    pub const EDGE_TERM: u64 = 0x4544_4745;
    pub const PLANT_STRUCTURE: u64 = 0x5354_5255;
    pub const PLANT_PERTURB: u64 = 0x5045_5254;
    pub const MC_TRIAL: u64 = 0x5452_4941;
    pub const LANCZOS_START: u64 = 0x4C41_4E43;
    pub const SWEEP: u64 = 0x5357_4545;
    pub const BASE_SPEC: u64 = 0x4241_5345;
}

/// The generator used by every sampler.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
