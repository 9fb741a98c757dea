//! Irregular primes via fast transforms of Bernoulli-number congruences.

pub mod arith;
pub mod checks;
pub mod ntt;
pub mod par;
pub mod pipeline;
pub mod rader;
pub mod scan;
pub mod results;
pub mod stats;
pub mod umbrella;
