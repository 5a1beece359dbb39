//! Seeding conventions. Every random draw in the crate goes through a
//! `ChaCha8Rng` built here, so results are bit-reproducible for a given
//! seed within one release.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed for permutation replicate `b` (1-based) of a test run with `seed`.
pub fn replicate_seed(seed: u64, b: usize) -> u64 {
    seed ^ (b as u64)
}

/// Well-mixed child seed for `(base, index)`; used wherever independent
/// streams are needed for different roles (data, lambdas, test) so that
/// XOR-derived replicate seeds of one role never land on another's.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix64(splitmix64(base) ^ splitmix64(index.wrapping_add(0x632B_E59B_D9B4_E019)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
