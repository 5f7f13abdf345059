//! Named deterministic random streams.
//!
//! Every random quantity in a simulation comes from its own ChaCha stream
//! keyed by `(master seed, iteration, purpose, index)`. Streams never share
//! state, so iterations can run in any order or on any thread and still
//! reproduce a serial run bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// What a stream is used for. The discriminant is part of the stream key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    ChannelTaps = 1,
    Cfo = 2,
    Bits = 3,
    Noise = 4,
    ChannelEstimate = 5,
    Benchmark = 6,
}

/// Derive the stream for `purpose` at `(iteration, index)`.
pub fn stream(master_seed: u64, iteration: u64, purpose: Purpose, index: u64) -> Stream {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&iteration.to_le_bytes());
    key[16..24].copy_from_slice(&(purpose as u64).to_le_bytes());
    key[24..32].copy_from_slice(&index.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}
