//! Deterministic seed derivation.
//!
//! Every random decision in the crate draws from a [`rand_chacha::ChaCha8Rng`]
//! seeded through this module, so a single master seed pins the whole
//! pipeline: graph topology, dataset draws, parameter init, membership
//! tie-breaks, shuffling, and dropout. Child seeds are derived with a
//! splitmix64 chain keyed by (sweep point, realization, purpose), which keeps
//! the streams for different purposes statistically independent without any
//! shared mutable state.

/// What a derived seed will be used for. The discriminant is hashed into the
/// child seed, so two purposes never share a stream even for equal
/// (sweep, realization) coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Graph = 1,
    Data = 2,
    Init = 3,
    Train = 4,
    Membership = 5,
    Shuffle = 6,
    Dropout = 7,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the seed for one purpose at one (sweep point, realization)
/// coordinate of an experiment. Top-level invocations that are not part of a
/// sweep pass `sweep = 0, realization = 0`.
pub fn child(master: u64, sweep: u64, realization: u64, purpose: Purpose) -> u64 {
    let mut h = splitmix64(master ^ 0x6A09_E667_F3BC_C909);
    h = splitmix64(h ^ sweep);
    h = splitmix64(h ^ realization);
    splitmix64(h ^ purpose as u64)
}
