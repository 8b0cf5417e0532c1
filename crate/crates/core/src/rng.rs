//! Counter-based random streams.
//!
//! Every Monte Carlo trial owns a ChaCha8 stream selected by `(seed, index)`:
//! the seed fixes the key and the index selects the ChaCha stream id, so the
//! values a trial sees do not depend on which worker runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

/// Stream for trial `index` under `seed`.
pub fn trial_rng(seed: u64, index: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Derives an independent seed from a parent seed and a path of labels.
///
/// Used to give every (cell, k) estimate of the solver its own key.
pub fn derive_seed(seed: u64, labels: &[u64]) -> u64 {
    labels
        .iter()
        .fold(mix64(seed ^ 0x6A09_E667_F3BC_C909), |acc, &label| {
            mix64(acc ^ mix64(label.wrapping_add(0x9E37_79B9_7F4A_7C15)))
        })
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform draw on (0, 1]; safe to pass to `ln` and to strict conditional sampling.
pub(crate) fn open_unit<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}
