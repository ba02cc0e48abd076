pub mod bits;
pub mod channel;
pub mod decoder;
pub mod encoder;
pub mod format;
pub mod gf;
pub mod harness;
pub mod legit;
pub mod mu;
pub mod oracle;
pub mod params;
pub mod rs;

use rand::{RngCore, SeedableRng};

/// The seeded generator used for every random choice in the crate.
pub type SeededRng = rand_xoshiro::SplitMix64;

/// The initial state is the first output for `seed`, so small seeds do not
/// start on small multiples of the SplitMix64 increment. From state 0 the
/// state after `2k` steps is twice the state after `k`, which correlates
/// those output words.
pub fn seeded_rng(seed: u64) -> SeededRng {
    let state = SeededRng::seed_from_u64(seed).next_u64();
    SeededRng::seed_from_u64(state)
}
