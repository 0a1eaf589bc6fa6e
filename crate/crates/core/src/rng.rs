//! Seeded, splittable random streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 stream keyed by
//! `(seed, domain)` and selected by a 64-bit stream index, so a row, detector
//! or Monte-Carlo sample always sees the same numbers regardless of the order
//! (or thread) in which it is generated:
//!
//! ```text
//! key    = splitmix64(seed ^ splitmix64(domain))
//! stream = ChaCha8Rng::seed_from_u64(key) with set_stream(index)
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags separating the uses of one user seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    MatrixRow = 1,
    Poisson = 2,
    FluxCheck = 3,
    MinMeasurementCheck = 4,
    Isometry = 5,
    PairCheck = 6,
    Signal = 7,
    Replicate = 8,
}

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn domain_key(seed: u64, domain: Domain) -> u64 {
    splitmix64(seed ^ splitmix64(domain as u64))
}

/// Independent substream `index` of `(seed, domain)`.
pub fn substream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(domain_key(seed, domain));
    rng.set_stream(index);
    rng
}

/// Seed for replicate `index` derived from a base seed: `base ^ splitmix64(index + 1)`.
pub fn replicate_seed(base: u64, index: u64) -> u64 {
    base ^ splitmix64(index.wrapping_add(1))
}
