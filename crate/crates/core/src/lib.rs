//! Exact and Monte Carlo symmetrization of estimands over coordinate
//! permutations, with brute-force oracles showing that the conditional law
//! of an exchangeable vector given its order statistics is the uniform law
//! over the rearrangements of those order statistics, whatever the
//! underlying distribution.
//!
//! Module map:
//!
//! - [`perm`]: permutation enumeration, sampling and algebra.
//! - [`symcore`]: points, the nondecreasing cone, symmetric closures and the
//!   order-statistic event identity on finite point sets.
//! - [`symmetrize`]: the symmetrization (Rao-Blackwell) operator.
//! - [`dist`]: finite exchangeable pmfs and seeded samplers.
//! - [`oracle`]: definitional conditional laws versus the permutation formula.
//! - [`harness`]: experiment drivers behind the `exsuff` CLI.

pub mod dist;
pub mod error;
pub mod harness;
pub mod oracle;
pub mod perm;
pub mod stats;
pub mod symcore;
pub mod symmetrize;

pub use error::{Error, Result};
pub use perm::{Perm, RankVector};
pub use symcore::{Point, PointSet, SortedPoint};

/// Largest dimension for which all `n!` permutations are enumerated.
pub const MAX_ENUM_DIM: usize = 10;

/// Seeded random stream used throughout. Independent sub-streams are derived
/// with [`stream`].
pub type Stream = rand_chacha::ChaCha8Rng;

/// Returns the random stream for `(seed, index)`. Distinct indices select
/// distinct ChaCha streams under the same key.
pub fn stream(seed: u64, index: u64) -> Stream {
    use rand::SeedableRng;
    let mut rng = Stream::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
