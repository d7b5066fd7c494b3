//! Quantile best-arm identification when every arm pull returns a single bit.
//!
//! The learner never sees rewards. It asks an agent "is the reward of arm `k`
//! at most `γ`?" and receives one bit per pull. [`engine::run`] performs
//! successive elimination on a threshold grid, locating each arm's quantile
//! with the noisy binary search in [`quantest`]. [`gaps`] evaluates the
//! instance-dependent gaps that govern how many pulls that takes.
//!
//! All numeric code is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`.

// `!(x > 0)` is how parameter checks reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod dist;
pub mod engine;
pub mod gaps;
pub mod grid;
pub mod quantest;
mod real;
#[cfg(test)]
mod test_util;

pub use real::Real;

pub type RewardDistribution = dist::RewardDistribution<f64>;
pub type Instance = dist::Instance<f64>;
pub type SatisfyingSet = dist::SatisfyingSet<f64>;
pub type GapConfig = gaps::GapConfig<f64>;
pub type GapReport = gaps::GapReport<f64>;
pub type Grid = grid::Grid<f64>;
pub type MnbsParams = quantest::MnbsParams<f64>;
pub type AlgoConfig = engine::AlgoConfig<f64>;
pub type RunResult = engine::RunResult<f64>;
