//! Locating a quantile on a sorted threshold list from one-bit comparisons.
//!
//! [`quant_est`] keeps a posterior over the intervals `[x_i, x_{i+1}]` and
//! queries where the posterior puts its `τ`-quantile, reweighting the two
//! sides of the queried point after every bit. [`quant_est_naive`] is plain
//! binary search with a fixed number of repetitions per comparison.

use serde::Serialize;
use thiserror::Error;

use crate::channel::{ThresholdOracle, ThresholdQuery};
use crate::dist::RewardDistribution;
use crate::real::Real;

/// Default multiplier in the query budget `⌈C Δ⁻² ln(m/δ)⌉`.
pub const DEFAULT_LOOP_CONSTANT: f64 = 1.0;

/// Steps between exact renormalizations of the log-weights.
const RESYNC_EVERY: u32 = 256;

#[derive(Debug, Error, PartialEq)]
pub enum QuantEstError {
    #[error("threshold list must be strictly increasing with at least two points")]
    UnsortedGrid,
    #[error("invalid search parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct MnbsParams<T> {
    /// Quantile level searched for.
    pub tau: T,
    /// Accuracy `Δ`: the answer's CDF bracket must meet `(τ-Δ, τ+Δ)`.
    pub delta_relax: T,
    /// Failure probability.
    pub delta_fail: T,
    /// Update strength `κ ∈ (0, 1]`.
    pub kappa: T,
    /// `C` in the query budget.
    pub loop_constant: T,
}

impl<T: Real> MnbsParams<T> {
    pub fn new(tau: T, delta_relax: T, delta_fail: T) -> Self {
        Self {
            tau,
            delta_relax,
            delta_fail,
            kappa: T::one(),
            loop_constant: T::lit(DEFAULT_LOOP_CONSTANT),
        }
    }

    /// `Δ <= min(τ, 1-τ)` is checked with a `1e-12` slack so callers passing
    /// `τ = q - Δ` computed in floating point are not rejected at equality.
    pub fn validate(&self) -> Result<(), QuantEstError> {
        let slack = T::lit(1e-12);
        let bad = |msg: String| Err(QuantEstError::InvalidParams(msg));
        if !(self.tau > T::zero() && self.tau < T::one()) {
            return bad(format!("tau = {} outside (0, 1)", self.tau));
        }
        if !(self.delta_relax > T::zero()) || self.delta_relax > self.tau.min(T::one() - self.tau) + slack {
            return bad(format!(
                "delta = {} must be positive and at most min(tau, 1 - tau) for tau = {}",
                self.delta_relax, self.tau
            ));
        }
        if !(self.delta_fail > T::zero() && self.delta_fail < T::one()) {
            return bad(format!("failure probability {} outside (0, 1)", self.delta_fail));
        }
        if !(self.kappa > T::zero() && self.kappa <= T::one()) {
            return bad(format!("kappa = {} outside (0, 1]", self.kappa));
        }
        if !(self.loop_constant > T::zero()) {
            return bad(format!("loop constant {} must be positive", self.loop_constant));
        }
        Ok(())
    }

    /// `⌈C Δ⁻² ln(m/δ)⌉` for `m` intervals.
    pub fn max_steps(&self, intervals: usize) -> u64 {
        let d = self.delta_relax.as_f64();
        let t = self.loop_constant.as_f64() / (d * d) * (intervals as f64 / self.delta_fail.as_f64()).ln();
        t.ceil().max(1.0) as u64
    }

    /// Repetitions per comparison of the naive search:
    /// `⌈2 Δ⁻² ln(2 ⌈log₂ m⌉ / δ)⌉`.
    pub fn naive_repetitions(&self, intervals: usize) -> u64 {
        let depth = (intervals as f64).log2().ceil().max(1.0);
        let d = self.delta_relax.as_f64();
        (2.0 / (d * d) * (2.0 * depth / self.delta_fail.as_f64()).ln()).ceil().max(1.0) as u64
    }
}

/// Result of one search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuantEstOutcome {
    /// Interval index `i`, meaning `[x_i, x_{i+1}]`.
    pub index: usize,
    /// Queries issued, including those answered without a pull.
    pub queries: u64,
    pub pulls: u64,
    pub sentinel_queries: u64,
}

fn validate_grid<T: Real>(x: &[T]) -> Result<(), QuantEstError> {
    if x.len() < 2 || x.iter().any(|v| v.is_nan()) || x.windows(2).any(|w| w[0] >= w[1]) {
        return Err(QuantEstError::UnsortedGrid);
    }
    Ok(())
}

/// Posterior over `m` intervals, stored as unnormalized log-weights.
///
/// Point `j` (`0..=m`) separates intervals `< j` from intervals `>= j`;
/// `C_j` is the posterior mass left of it. The bracket `j` with
/// `C_{j-1} < τ <= C_j` is maintained incrementally.
#[derive(Debug, Clone)]
pub struct Posterior<T> {
    logw: Vec<T>,
    log_z: T,
    tau: T,
    j: usize,
    c_lo: T,
    c_hi: T,
    carry: T,
    since_sync: u32,
}

impl<T: Real> Posterior<T> {
    pub fn uniform(intervals: usize, tau: T) -> Self {
        assert!(intervals >= 1);
        let mut p = Self {
            logw: vec![T::zero(); intervals],
            log_z: T::zero(),
            tau,
            j: 1,
            c_lo: T::zero(),
            c_hi: T::zero(),
            carry: T::zero(),
            since_sync: 0,
        };
        p.resync();
        p
    }

    pub fn intervals(&self) -> usize {
        self.logw.len()
    }

    fn weight(&self, i: usize) -> T {
        (self.logw[i] - self.log_z).exp()
    }

    /// Normalized weights.
    pub fn weights(&self) -> Vec<T> {
        (0..self.intervals()).map(|i| self.weight(i)).collect()
    }

    /// Interval of largest weight, lowest index on ties.
    pub fn map_estimate(&self) -> usize {
        let mut best = 0;
        for i in 1..self.logw.len() {
            if self.logw[i] > self.logw[best] {
                best = i;
            }
        }
        best
    }

    /// Rebases the log-weights to sum 1 and recomputes the bracket by a scan.
    fn resync(&mut self) {
        let max = self.logw.iter().copied().fold(T::neg_infinity(), T::max);
        let sum = self.logw.iter().fold(T::zero(), |s, &l| s + (l - max).exp());
        let log_z = max + sum.ln();
        for l in self.logw.iter_mut() {
            *l = *l - log_z;
        }
        self.log_z = T::zero();
        self.since_sync = 0;
        let m = self.intervals();
        let mut c = T::zero();
        for j in 1..=m {
            let next = if j == m { T::one() } else { c + self.weight(j - 1) };
            if next >= self.tau || j == m {
                self.j = j;
                self.c_lo = c;
                self.c_hi = next.max(c);
                return;
            }
            c = next;
        }
    }

    /// Next query point: one of the two points around the posterior's
    /// `τ`-quantile, alternated so the long-run average of their `C` values
    /// equals `τ`.
    pub fn next_point(&mut self) -> usize {
        let width = self.c_hi - self.c_lo;
        let rho = if width > T::zero() {
            ((self.c_hi - self.tau) / width).max(T::zero()).min(T::one())
        } else {
            T::zero()
        };
        self.carry = self.carry + rho;
        if self.carry >= T::one() {
            self.carry = self.carry - T::one();
            self.j - 1
        } else {
            self.j
        }
    }

    /// Applies the bit observed at point `s`: on 1 the intervals left of `s`
    /// gain weight by `1 + up` against `1 - up` on the right; on 0 the right
    /// side gains by `1 + down` against `1 - down`.
    pub fn update(&mut self, s: usize, bit: bool, up: T, down: T) {
        let m = self.intervals();
        if s == 0 || s == m {
            // Both sides get the same factor; normalization undoes it.
            return;
        }
        debug_assert!(s + 1 == self.j || s == self.j);
        let cs = if s == self.j { self.c_hi } else { self.c_lo };
        let left_small = s <= m - s;
        let one = T::one();
        let (zr, cs_new) = if bit {
            let l = ((one + up) / (one - up)).ln();
            if left_small {
                self.logw[..s].iter_mut().for_each(|v| *v = *v + l);
                let zr = cs * l.exp() + (one - cs);
                (zr, cs * l.exp() / zr)
            } else {
                self.logw[s..].iter_mut().for_each(|v| *v = *v - l);
                let zr = cs + (one - cs) * (-l).exp();
                (zr, cs / zr)
            }
        } else {
            let l = ((one + down) / (one - down)).ln();
            if left_small {
                self.logw[..s].iter_mut().for_each(|v| *v = *v - l);
                let zr = cs * (-l).exp() + (one - cs);
                (zr, cs * (-l).exp() / zr)
            } else {
                self.logw[s..].iter_mut().for_each(|v| *v = *v + l);
                let zr = cs + (one - cs) * l.exp();
                (zr, cs / zr)
            }
        };
        self.log_z = self.log_z + zr.ln();
        self.since_sync += 1;
        if self.since_sync >= RESYNC_EVERY {
            self.resync();
        } else {
            self.locate_from(s, cs_new.max(T::zero()).min(one));
        }
    }

    /// Re-brackets starting from point `s` whose cumulative mass is `c`.
    fn locate_from(&mut self, s: usize, c: T) {
        let m = self.intervals();
        let (mut j, mut c) = (s, c);
        if c < self.tau {
            loop {
                let next = if j + 1 == m { T::one() } else { c + self.weight(j) };
                j += 1;
                if next >= self.tau || j == m {
                    self.j = j;
                    self.c_lo = c;
                    self.c_hi = next.max(c).min(T::one());
                    return;
                }
                c = next;
            }
        } else {
            loop {
                let prev = if j == 1 { T::zero() } else { c - self.weight(j - 1) };
                if prev < self.tau || j == 1 {
                    self.j = j;
                    self.c_lo = prev.max(T::zero()).min(c);
                    self.c_hi = c;
                    return;
                }
                j -= 1;
                c = prev;
            }
        }
    }
}

/// Noisy binary search for the interval of `x` where the arm's CDF crosses
/// `τ`. Issues exactly `⌈C Δ⁻² ln(m/δ)⌉` queries, where `m = x.len() - 1`.
pub fn quant_est<T: Real, O: ThresholdOracle<T> + ?Sized>(
    oracle: &mut O,
    arm: usize,
    x: &[T],
    params: &MnbsParams<T>,
    round: u32,
) -> Result<QuantEstOutcome, QuantEstError> {
    validate_grid(x)?;
    params.validate()?;
    let m = x.len() - 1;
    let steps = params.max_steps(m);
    let before = (oracle.ledger().total_pulls, oracle.ledger().sentinel_queries);
    let tau = params.tau;
    let step = params.kappa * params.delta_relax * T::half();
    // Sized so that the weight of the true interval drifts upward at the
    // same rate from either side for any τ.
    let up = step / tau;
    let down = step / (T::one() - tau);
    let mut post = Posterior::uniform(m, tau);
    for _ in 0..steps {
        let s = post.next_point();
        let bit = oracle
            .query(ThresholdQuery {
                arm,
                threshold: x[s],
                round,
            })
            .bit;
        post.update(s, bit, up, down);
    }
    let after = oracle.ledger();
    Ok(QuantEstOutcome {
        index: post.map_estimate(),
        queries: steps,
        pulls: after.total_pulls - before.0,
        sentinel_queries: after.sentinel_queries - before.1,
    })
}

/// Binary search over the finite points `x_1 … x_{m-1}`, resolving each
/// comparison by majority against `τ` over a fixed number of queries.
pub fn quant_est_naive<T: Real, O: ThresholdOracle<T> + ?Sized>(
    oracle: &mut O,
    arm: usize,
    x: &[T],
    params: &MnbsParams<T>,
    round: u32,
) -> Result<QuantEstOutcome, QuantEstError> {
    validate_grid(x)?;
    params.validate()?;
    let m = x.len() - 1;
    let reps = params.naive_repetitions(m);
    let before = (oracle.ledger().total_pulls, oracle.ledger().sentinel_queries);
    let (mut lo, mut hi) = (0usize, m - 1);
    let mut queries = 0u64;
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        let ones = (0..reps)
            .filter(|_| {
                oracle
                    .query(ThresholdQuery {
                        arm,
                        threshold: x[mid],
                        round,
                    })
                    .bit
            })
            .count();
        queries += reps;
        if T::lit(ones as f64) >= params.tau * T::lit(reps as f64) {
            hi = mid - 1;
        } else {
            lo = mid;
        }
    }
    let after = oracle.ledger();
    Ok(QuantEstOutcome {
        index: lo,
        queries,
        pulls: after.total_pulls - before.0,
        sentinel_queries: after.sentinel_queries - before.1,
    })
}

/// Whether `[F(x_i), F(x_{i+1})]` meets the open interval `(τ-Δ, τ+Δ)`.
pub fn verify_interval<T: Real>(dist: &RewardDistribution<T>, x: &[T], i: usize, tau: T, delta: T) -> bool {
    let f = |v: T| {
        if v == T::neg_infinity() {
            T::zero()
        } else if v == T::infinity() {
            T::one()
        } else {
            dist.cdf(v)
        }
    };
    f(x[i]) < tau + delta && f(x[i + 1]) > tau - delta
}

/// Indices `i` that satisfy [`verify_interval`].
pub fn valid_indices<T: Real>(dist: &RewardDistribution<T>, x: &[T], tau: T, delta: T) -> Vec<usize> {
    (0..x.len() - 1)
        .filter(|&i| verify_interval(dist, x, i, tau, delta))
        .collect()
}
