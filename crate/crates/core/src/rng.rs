//! Seed derivation. Every stochastic step draws from a ChaCha stream keyed by
//! the run seed plus a purpose tag and indices, so serial and parallel runs
//! consume identical streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix a base seed with a sequence of stream identifiers.
pub fn derive_seed(seed: u64, keys: &[u64]) -> u64 {
    keys.iter()
        .fold(splitmix64(seed), |acc, &k| splitmix64(acc ^ splitmix64(k)))
}

pub fn stream(seed: u64, keys: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, keys))
}

/// Purpose tags keep streams for different steps apart.
pub mod tag {
    pub const SYNTH: u64 = 0x5359_4e54;
    pub const FOLDS: u64 = 0x464f_4c44;
    pub const FOREST: u64 = 0x4652_5354;
    pub const TREE: u64 = 0x5452_4545;
    pub const LASSO_CV: u64 = 0x4c41_5353;
    pub const INNER_CV: u64 = 0x494e_4e52;
}
