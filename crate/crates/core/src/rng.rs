//! Reproducible random streams.
//!
//! A [`RngSeed`] names one ChaCha stream: the master seed keys the cipher and
//! the stream index (usually the trial number) selects an independent
//! keystream, so trial `i` draws the same numbers no matter which worker runs
//! it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed {
    pub master: u64,
    pub stream: u64,
}

impl RngSeed {
    pub fn new(master: u64, stream: u64) -> RngSeed {
        RngSeed { master, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.stream);
        rng
    }

    /// A seed for a named sub-task of this stream (background, signal, ...).
    pub fn derive(&self, tag: u64) -> RngSeed {
        RngSeed {
            master: splitmix64(self.master ^ splitmix64(tag.wrapping_add(0x5bd1_e995))),
            stream: self.stream,
        }
    }

    pub fn with_stream(&self, stream: u64) -> RngSeed {
        RngSeed {
            master: self.master,
            stream,
        }
    }
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Sub-task tags used by the samplers and the harness.
pub mod tag {
    pub const BACKGROUND: u64 = 1;
    pub const SIGNAL: u64 = 2;
    pub const EMBEDDING: u64 = 3;
    pub const PLACEMENT: u64 = 4;
    pub const EIGEN_START: u64 = 5;
    pub const KMEANS: u64 = 6;
    pub const CALIBRATION: u64 = 7;
}
