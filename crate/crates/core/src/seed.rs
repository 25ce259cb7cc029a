//! Counter-based derivation of random streams.
//!
//! Every random quantity is drawn from a generator seeded by a key derived
//! from `(master seed, domain tag, index, ...)`. Work can then be split into
//! any number of shards and still reproduce the sequential result exactly.

use rand::SeedableRng;
use rand_pcg::Pcg64Mcg;

/// Generator used for every derived stream.
pub type StreamRng = Pcg64Mcg;

pub const TAG_POSTERIOR: u64 = 0x706f_7374;
pub const TAG_NULL_TABLE: u64 = 0x6e75_6c6c;
pub const TAG_PROPOSAL: u64 = 0x7072_6f70;
pub const TAG_RESAMPLE: u64 = 0x7265_7361;
pub const TAG_REFERENCE: u64 = 0x7265_6665;
pub const TAG_REALIZATION: u64 = 0x7265_616c;
pub const TAG_GAUSSIAN: u64 = 0x6761_7573;
pub const TAG_POINT: u64 = 0x706f_696e;
pub const TAG_NON_DISCOVERY: u64 = 0x6e6f_6e64;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamKey(u64);

impl StreamKey {
    pub fn new(master_seed: u64) -> Self {
        StreamKey(splitmix64(master_seed))
    }

    #[inline]
    pub fn child(self, index: u64) -> Self {
        StreamKey(splitmix64(self.0 ^ splitmix64(index.wrapping_add(0x5851_f42d_4c95_7f2d))))
    }

    pub fn raw(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn rng(self) -> StreamRng {
        StreamRng::seed_from_u64(self.0)
    }
}

/// Hash of a count vector, used to key statistics that must be a function of
/// the table alone.
pub fn content_key(key: StreamKey, cells: &[u64]) -> StreamKey {
    cells.iter().fold(key, |k, &c| k.child(c))
}
