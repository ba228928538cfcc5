//! Seeded, splittable random streams.
//!
//! A [`RandomStream`] is a ChaCha8 generator plus the root seed it descends
//! from. [`RandomStream::substream`] derives an independent child stream from
//! the parent's key and an index, without touching the parent's position, so
//! Monte-Carlo trial `t` always sees the same draws no matter which worker
//! runs it or in what order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct RandomStream {
    rng: ChaCha8Rng,
    root_seed: u64,
}

impl RandomStream {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            root_seed: seed,
        }
    }

    /// Seed of the root stream this one was split from.
    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    /// Independent child stream keyed by `index`.
    pub fn substream(&self, index: u64) -> RandomStream {
        let mut keyer = ChaCha8Rng::from_seed(self.rng.get_seed());
        keyer.set_stream(index.wrapping_add(1));
        let mut key = [0u8; 32];
        keyer.fill_bytes(&mut key);
        RandomStream {
            rng: ChaCha8Rng::from_seed(key),
            root_seed: self.root_seed,
        }
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}
