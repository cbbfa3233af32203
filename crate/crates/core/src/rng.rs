//! Seeded random substreams.
//!
//! Every random draw in the engine comes from a ChaCha stream keyed by
//! `(master seed, purpose, iteration, index)`, so serial and parallel
//! execution consume exactly the same numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// What a substream is used for. Distinct purposes never share draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Gradient = 1,
    Kl = 2,
    Init = 3,
    Target = 4,
    Predictive = 5,
    Data = 6,
    Frozen = 7,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Master seed from which all substreams of one run are derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStream {
    pub seed: u64,
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn substream(&self, purpose: Purpose, iteration: u64, index: u64) -> Rng {
        let mut h = splitmix(self.seed);
        h = splitmix(h ^ purpose as u64);
        h = splitmix(h ^ iteration);
        h = splitmix(h ^ index);
        ChaCha8Rng::seed_from_u64(h)
    }
}
