//! Exact branch-price-cut-and-switch for routing worker teams under
//! time-binned stochastic travel times.

pub mod cuts;
pub mod distributions;
pub mod feascheck;
pub mod instance_gen;
pub mod master;
pub mod model;
pub mod pricing;
pub mod search;
pub mod simulate;

#[cfg(test)]
pub(crate) mod test_support;

pub use bpcs_lp::Scalar;
pub use distributions::{DiscreteDistribution, DistributionError, Time};

/// Distribution over `f64` probabilities, used throughout the solver.
pub type Distribution = DiscreteDistribution<f64>;
pub type Distribution32 = DiscreteDistribution<f32>;
