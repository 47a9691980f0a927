//! Keyed random streams.
//!
//! Every stochastic draw in the crate comes from a ChaCha8 stream whose key is
//! derived from a master seed plus a tuple of indices (experiment, trial,
//! replicate, ...) and a stream tag. Streams never depend on the order in which
//! other streams were consumed, so parallel and sequential runs agree bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags. Separate tags keep e.g. process noise unchanged when the
/// input scale is set to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    ProcessNoise = 1,
    Input = 2,
    Bootstrap = 3,
    Replicate = 4,
    Statistic = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix a seed with a sequence of indices into a new 64-bit key.
pub fn derive_key(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Generator for `(seed, path..., tag)`.
pub fn keyed_rng(seed: u64, path: &[u64], tag: Stream) -> ChaCha8Rng {
    let key = derive_key(seed, path);
    let mut bytes = [0u8; 32];
    for (i, chunk) in bytes.chunks_mut(8).enumerate() {
        chunk.copy_from_slice(&splitmix64(key.wrapping_add(i as u64)).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(bytes);
    rng.set_stream(tag as u64);
    rng
}

/// FNV-1a, used to turn scenario identifiers into stable seed components.
pub fn stable_hash(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325_u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}
