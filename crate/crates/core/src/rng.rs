//! Named, seeded RNG substreams.
//!
//! All randomness in a run flows from one master seed. Each consumer
//! (fold split, SMOTE, per-tree bootstrap, MLP init) gets its own ChaCha
//! stream keyed by `(master seed, stream, index)`, so any component can be
//! replayed in isolation and parallel schedules cannot change results.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Consumers of randomness. The tag values are part of the reproducibility
/// contract and must not change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    FoldSplit,
    Smote,
    Forest,
    Tree,
    MlpInit,
    MlpShuffle,
    Mlp,
    Synth,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::FoldSplit => 0x666f_6c64_7370_6c74,
            Stream::Smote => 0x736d_6f74_6500_0000,
            Stream::Forest => 0x666f_7265_7374_0000,
            Stream::Tree => 0x7472_6565_0000_0000,
            Stream::MlpInit => 0x6d6c_7069_6e69_7400,
            Stream::MlpShuffle => 0x6d6c_7073_6875_6666,
            Stream::Mlp => 0x6d6c_7000_0000_0000,
            Stream::Synth => 0x7379_6e74_6800_0000,
        }
    }
}

/// RNG for `stream` number `index` under `seed`.
pub fn substream(seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ stream.tag());
    rng.set_stream(index);
    rng
}

/// A child seed, for handing to an API that takes a plain `u64` seed.
pub fn derive_seed(seed: u64, stream: Stream, index: u64) -> u64 {
    substream(seed, stream, index).next_u64()
}
