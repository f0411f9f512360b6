//! Exact counting, sampling and limit-law analysis of random finite-dimensional
//! representations of `sl_{r+1}(ℂ)`.

pub mod boltzmann;
pub mod census;
pub mod error;
pub mod exact_count;
pub mod limits;
pub mod quadrature;
pub mod real;
pub mod statistics;
pub mod verify;
pub mod weights;

pub use error::{Error, Result};
pub use real::{CompensatedSum, Estimate, Real};
pub use weights::{HalfInt, Rank, WeightVector};

/// Stream `stream` of the ChaCha8 generator keyed by `seed`: draw `i` of a
/// parallel job uses stream `i`, so results do not depend on scheduling.
pub fn stream_rng(seed: u64, stream: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub type Params = boltzmann::BoltzmannParams<f64>;
pub type Constants = limits::LimitConstants<f64>;
pub type Gap = verify::LimitGap;
