//! Reproducible random streams.
//!
//! Every logical unit of work (one replicate, one reference draw batch) gets
//! its own ChaCha8 stream addressed by `(master seed, purpose, index)`. The
//! cipher is counter based, so stream `i` is the same no matter which worker
//! thread consumes it or in which order replicates are scheduled.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One independent random stream.
#[derive(Debug, Clone)]
pub struct Stream(ChaCha8Rng);

impl Stream {
    pub fn new(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Self(rng)
    }

    /// Uniform variate on the open interval (0, 1).
    #[inline]
    pub fn open01(&mut self) -> f64 {
        open01(self)
    }
}

/// Uniform variate on (0, 1) from any generator; never returns 0 or 1.
#[inline]
pub fn open01<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 12) as f64 + 0.5) * (1.0 / 4_503_599_627_370_496.0)
}

impl RngCore for Stream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives substreams from a master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamFactory {
    seed: u64,
}

impl StreamFactory {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Stream `index` within the family labelled `purpose`.
    pub fn stream(&self, purpose: u64, index: u64) -> Stream {
        Stream::new(splitmix64(self.seed ^ splitmix64(purpose)), index)
    }

    /// A child factory, for nesting (e.g. one per horizon in a ladder).
    pub fn child(&self, purpose: u64) -> StreamFactory {
        StreamFactory {
            seed: splitmix64(self.seed.rotate_left(17) ^ splitmix64(purpose ^ 0xa5a5_5a5a)),
        }
    }
}
