//! Seeded random streams.
//!
//! Every stochastic procedure draws from a `(seed, stream_id)` pair: the seed
//! names the run, the stream id names the job inside it (a bootstrap
//! replicate, a projection, a class blob). Streams are ChaCha8 instances with
//! the stream id as the ChaCha stream selector, so a job's draws never depend
//! on which worker runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Purpose tags mixed into the run seed so that, e.g., bootstrap replicate 3
/// and projection 3 never share a stream.
pub mod domain {
    pub const BOOTSTRAP: u64 = 0x0b00_7577;
    pub const PROJECTION: u64 = 0x5e1c_ed00;
    pub const PAIRS: u64 = 0x9a12_5000;
    pub const JITTER: u64 = 0x1177_e400;
    pub const GENERATOR: u64 = 0x6e4e_7a70;
    pub const SAMPLES: u64 = 0x5a3b_1e50;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeededStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl SeededStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        SeededStream { seed, stream_id }
    }

    /// Stream `stream_id` under the sub-seed for `domain`.
    pub fn for_domain(seed: u64, domain: u64, stream_id: u64) -> Self {
        SeededStream {
            seed: mix(seed ^ mix(domain)),
            stream_id,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
