//! Seeded, stream-split random number generation.
//!
//! Every consumer in a run (environment, agent, replay sampling, distance
//! model, goal generator, evaluation) draws from its own ChaCha stream derived
//! from the run seed. Switching the goal generator on or off therefore never
//! shifts the draws seen by any other component.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Well-known stream ids used by the training harness.
pub mod streams {
    pub const ENV: u64 = 0;
    pub const AGENT: u64 = 1;
    pub const REPLAY: u64 = 2;
    pub const DDF: u64 = 3;
    pub const GOALS: u64 = 4;
    pub const EVAL: u64 = 5;
    pub const INIT: u64 = 6;
    pub const SNAPSHOT: u64 = 7;
}

#[derive(Clone, Debug)]
pub struct RngHandle {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl RngHandle {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// A fresh handle on another stream of the same seed.
    pub fn sibling(&self, stream: u64) -> Self {
        Self::new(self.seed, stream)
    }
}

impl RngCore for RngHandle {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn equal_seed_and_stream_agree() {
        let mut a = RngHandle::new(42, 3);
        let mut b = RngHandle::new(42, 3);
        for _ in 0..1000 {
            assert_eq!(a.gen::<u64>(), b.gen::<u64>());
        }
    }

    #[test]
    fn streams_are_independent() {
        let mut a = RngHandle::new(42, 0);
        let mut b = RngHandle::new(42, 1);
        let xs: Vec<u64> = (0..16).map(|_| a.gen()).collect();
        let ys: Vec<u64> = (0..16).map(|_| b.gen()).collect();
        assert_ne!(xs, ys);
    }

    #[test]
    fn known_first_draw_is_stable() {
        // Pinned so a dependency bump that changes the stream is noticed.
        let mut a = RngHandle::new(0, 0);
        let first = a.next_u64();
        assert_eq!(first, 13_080_132_717_333_068_652);
        assert_eq!(a.sibling(0).next_u64(), first);
    }
}
