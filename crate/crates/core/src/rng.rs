//! Seed plumbing. Every random stream in the crate is a ChaCha8 generator
//! whose seed is derived from a user seed and a stream tag, so results never
//! depend on scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StdRng = ChaCha8Rng;

/// Stream tags used when deriving sub-seeds.
pub mod stream {
    pub const SUBSAMPLE: u64 = 0x5355_4253;
    pub const LABELS: u64 = 0x4c41_4245;
    pub const EDGES: u64 = 0x4544_4745;
    pub const PSI: u64 = 0x5053_4921;
    pub const OUTLIERS: u64 = 0x4f55_544c;
    pub const SVD: u64 = 0x5356_4421;
    pub const KMEANS: u64 = 0x4b4d_4541;
    pub const FIT: u64 = 0x4649_5421;
    pub const REPLICATE: u64 = 0x5245_504c;
    pub const SELECT: u64 = 0x5345_4c45;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a base seed with a stream tag and an index into a new seed.
pub fn derive_seed(base: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(base ^ splitmix64(tag)).wrapping_add(index))
}

pub fn rng_from_seed(seed: u64) -> StdRng {
    ChaCha8Rng::seed_from_u64(seed)
}
