//! Seeded random streams.
//!
//! Every consumer of randomness asks for a stream by `(seed, purpose, index)`.
//! Streams are ChaCha8 instances keyed by the seed and purpose, with the
//! index selecting the ChaCha stream id, so adding draws to one purpose never
//! shifts the values seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Placement = 1,
    CellRepresentative = 2,
    LinkRate = 3,
    Delivery = 4,
    Jitter = 5,
    LocationError = 6,
    Pairs = 7,
    Synthetic = 8,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    let mut state = seed ^ (purpose as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
