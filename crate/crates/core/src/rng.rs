//! Per-purpose random streams derived from one run seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    ActorInit = 1,
    CriticInit = 2,
    Noise = 3,
    Sampling = 4,
    Split = 5,
    Synthetic = 6,
    Selftest = 7,
}

/// Independent ChaCha stream for `purpose`; drawing from one never shifts another.
pub fn stream(seed: u64, purpose: Stream) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose as u64);
    rng
}
