//! One-bit learner/agent protocol.
//!
//! The learner sends a threshold query for an arm; the agent draws a fresh
//! reward and replies with the single bit `reward <= threshold`. Infinite
//! thresholds are answered without a pull.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dist::Instance;
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdQuery<T> {
    /// 0-based arm index.
    pub arm: usize,
    pub threshold: T,
    /// Round of the caller, for traces only.
    pub round: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitFeedback {
    /// `reward <= threshold`.
    pub bit: bool,
}

/// Pull and bit counters of one trial.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PullLedger {
    pub pulls_per_arm: Vec<u64>,
    pub total_pulls: u64,
    pub uplink_bits: u64,
    /// Queries at `±∞`, answered without pulling.
    pub sentinel_queries: u64,
}

impl PullLedger {
    pub fn new(arms: usize) -> Self {
        Self {
            pulls_per_arm: vec![0; arms],
            ..Self::default()
        }
    }

    fn record_pull(&mut self, arm: usize) {
        self.pulls_per_arm[arm] += 1;
        self.total_pulls += 1;
        self.uplink_bits += 1;
    }
}

/// Anything that answers threshold queries, one bit each.
pub trait ThresholdOracle<T> {
    fn num_arms(&self) -> usize;

    fn query(&mut self, query: ThresholdQuery<T>) -> BitFeedback;

    fn ledger(&self) -> &PullLedger;
}

/// The reward-holding side. It keeps nothing between queries except the
/// random streams, one per arm, so its answers depend only on the current
/// query and a fresh draw.
#[derive(Debug, Clone)]
pub struct Agent<'a, T> {
    instance: &'a Instance<T>,
    streams: Vec<ChaCha8Rng>,
}

impl<'a, T: Real> Agent<'a, T> {
    /// Arm `k` draws from ChaCha8 stream `k` of the trial seed, so a trial's
    /// rewards do not depend on how queries to different arms interleave.
    pub fn new(instance: &'a Instance<T>, seed: u64) -> Self {
        let streams = (0..instance.num_arms())
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(k as u64);
                rng
            })
            .collect();
        Self { instance, streams }
    }

    fn answer(&mut self, arm: usize, threshold: T) -> bool {
        self.instance.arm(arm).sample(&mut self.streams[arm]) <= threshold
    }
}

/// Agent plus pull accounting; the learner's only handle on the rewards.
#[derive(Debug, Clone)]
pub struct Channel<'a, T> {
    agent: Agent<'a, T>,
    ledger: PullLedger,
}

impl<'a, T: Real> Channel<'a, T> {
    pub fn new(instance: &'a Instance<T>, seed: u64) -> Self {
        Self {
            agent: Agent::new(instance, seed),
            ledger: PullLedger::new(instance.num_arms()),
        }
    }

    pub fn reset_ledger(&mut self) {
        self.ledger = PullLedger::new(self.ledger.pulls_per_arm.len());
    }

    pub fn snapshot_ledger(&self) -> PullLedger {
        self.ledger.clone()
    }
}

impl<T: Real> ThresholdOracle<T> for Channel<'_, T> {
    fn num_arms(&self) -> usize {
        self.ledger.pulls_per_arm.len()
    }

    /// Panics on an out-of-range arm.
    fn query(&mut self, query: ThresholdQuery<T>) -> BitFeedback {
        assert!(query.arm < self.num_arms(), "arm {} out of range", query.arm);
        if query.threshold.is_infinite() {
            self.ledger.sentinel_queries += 1;
            return BitFeedback {
                bit: query.threshold > T::zero(),
            };
        }
        self.ledger.record_pull(query.arm);
        BitFeedback {
            bit: self.agent.answer(query.arm, query.threshold),
        }
    }

    fn ledger(&self) -> &PullLedger {
        &self.ledger
    }
}
