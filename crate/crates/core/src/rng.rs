//! Seeded random streams.
//!
//! Every episode owns one seed; each consumer draws from its own ChaCha
//! stream so that adding draws in one consumer never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Independent consumers of randomness within one episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Scenario = 0,
    Pedestrian = 1,
    ObservationNoise = 2,
    BeliefInit = 3,
    Belief = 4,
    Planner = 5,
}

pub fn stream(seed: u64, which: Stream) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = stream(7, Stream::Scenario).random();
        let b: u64 = stream(7, Stream::Scenario).random();
        let c: u64 = stream(7, Stream::Pedestrian).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
