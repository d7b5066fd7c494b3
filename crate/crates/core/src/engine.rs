//! Successive elimination over the one-bit channel.
//!
//! Each round halves the accuracy `Δ^(t)`, locates a lower and an upper
//! quantile interval for every active arm on the threshold grid, tightens
//! the arm's confidence bounds, and drops arms whose upper bound is below the
//! best lower bound. The loop stops once some arm's lower bound is within
//! `(c+1)ε̃` of every other arm's upper bound.

use serde::Serialize;
use thiserror::Error;

use crate::channel::{PullLedger, ThresholdOracle};
use crate::dist::Instance;
use crate::gaps::{arm_gaps, GapConfig, GapError, Variant};
use crate::grid::Grid;
use crate::quantest::{quant_est, MnbsParams, QuantEstError, DEFAULT_LOOP_CONSTANT};
use crate::real::{max_or_neg_inf, Real};

/// Round cap; `Δ^(64)` is below `1e-18`.
pub const DEFAULT_MAX_ROUNDS: u32 = 64;

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("instance has no arms")]
    NoArms,
    #[error(transparent)]
    QuantEst(#[from] QuantEstError),
    #[error(transparent)]
    Gap(#[from] GapError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct AlgoConfig<T> {
    pub lambda: T,
    pub eps: T,
    pub q: T,
    pub delta: T,
    pub c: u32,
    pub max_rounds: u32,
    /// Update strength of the quantile search.
    pub kappa: T,
    /// Budget multiplier of the quantile search.
    pub loop_constant: T,
}

impl<T: Real> AlgoConfig<T> {
    pub fn new(lambda: T, eps: T, q: T, delta: T, c: u32) -> Result<Self, EngineError> {
        let cfg = Self {
            lambda,
            eps,
            q,
            delta,
            c,
            max_rounds: DEFAULT_MAX_ROUNDS,
            kappa: T::one(),
            loop_constant: T::lit(DEFAULT_LOOP_CONSTANT),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: String| Err(EngineError::InvalidConfig(m));
        if !(self.eps > T::zero() && self.lambda > self.eps && self.lambda.is_finite()) {
            return bad(format!("need lambda > eps > 0, got {} and {}", self.lambda, self.eps));
        }
        if !(self.q > T::zero() && self.q < T::one()) {
            return bad(format!("q = {} outside (0, 1)", self.q));
        }
        if !(self.delta > T::zero() && self.delta < T::one()) {
            return bad(format!("delta = {} outside (0, 1)", self.delta));
        }
        if self.c < 1 {
            return bad("c must be at least 1".into());
        }
        if self.max_rounds < 1 {
            return bad("max_rounds must be at least 1".into());
        }
        Ok(())
    }

    pub fn grid(&self) -> Grid<T> {
        Grid::new(self.lambda, self.eps, self.c)
    }

    /// `Δ^(t) = 2^{1-t} min(q, 1-q)`.
    pub fn round_accuracy(&self, t: u32) -> T {
        self.q.min(T::one() - self.q) * T::two().powi(1 - t as i32)
    }
}

/// One active arm within one round.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct ArmRound<T> {
    pub arm: usize,
    /// Interval index from the lower search.
    pub l: usize,
    /// Interval index from the upper search.
    pub u: usize,
    /// Grid indices of the bounds after clamping.
    pub lcb_index: usize,
    pub ucb_index: usize,
    pub lcb: T,
    pub ucb: T,
    pub pulls: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct RoundTrace<T> {
    pub t: u32,
    pub delta_t: T,
    /// Active arms at the start of the round.
    pub active: Vec<usize>,
    /// Failure budget of each quantile search this round.
    pub call_delta: T,
    pub arms: Vec<ArmRound<T>>,
    /// Arms still active after elimination.
    pub survivors: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct RunResult<T> {
    /// `None` when the round cap was hit or no arm qualified.
    pub returned_arm: Option<usize>,
    /// All arms meeting the return condition, ascending.
    pub qualifying: Vec<usize>,
    pub final_active: Vec<usize>,
    pub ledger: PullLedger,
    pub rounds: Vec<RoundTrace<T>>,
    pub terminated: bool,
    pub n: usize,
    pub eps_tilde: T,
}

impl<T: Real> RunResult<T> {
    /// `Σ_t Σ_{k ∈ A_t} 2 δΔ^(t)/(2|A_t|)`.
    pub fn failure_budget_spent(&self) -> T {
        self.rounds.iter().fold(T::zero(), |s, r| {
            s + T::lit(r.active.len() as f64) * T::two() * r.call_delta
        })
    }
}

/// Runs the learner on `oracle` until it stops or hits `cfg.max_rounds`.
pub fn run<T: Real, O: ThresholdOracle<T> + ?Sized>(
    oracle: &mut O,
    cfg: &AlgoConfig<T>,
) -> Result<RunResult<T>, EngineError> {
    cfg.validate()?;
    let k_arms = oracle.num_arms();
    if k_arms == 0 {
        return Err(EngineError::NoArms);
    }
    let grid = cfg.grid();
    let x = grid.points();
    let gap_to_stop = T::lit(f64::from(cfg.c) + 1.0) * grid.eps_tilde();
    let mut active: Vec<usize> = (0..k_arms).collect();
    let mut lcb = vec![1usize; k_arms];
    let mut ucb = vec![grid.top(); k_arms];
    let mut rounds = Vec::new();
    let mut t = 1u32;
    loop {
        if !keep_going(&active, &lcb, &ucb, x, gap_to_stop) {
            break;
        }
        if t > cfg.max_rounds {
            return Ok(RunResult {
                returned_arm: None,
                qualifying: Vec::new(),
                final_active: active,
                ledger: oracle.ledger().clone(),
                rounds,
                terminated: false,
                n: grid.n(),
                eps_tilde: grid.eps_tilde(),
            });
        }
        let delta_t = cfg.round_accuracy(t);
        let half = delta_t * T::half();
        let call_delta = cfg.delta * delta_t / (T::two() * T::lit(active.len() as f64));
        let mut lower = MnbsParams::new(cfg.q - half, half, call_delta);
        lower.kappa = cfg.kappa;
        lower.loop_constant = cfg.loop_constant;
        let upper = MnbsParams {
            tau: cfg.q + half,
            ..lower
        };
        let mut arms = Vec::with_capacity(active.len());
        for &k in &active {
            let before = oracle.ledger().total_pulls;
            let l = quant_est(oracle, k, x, &lower, t)?.index;
            lcb[k] = lcb[k].max(l);
            let u = quant_est(oracle, k, x, &upper, t)?.index;
            ucb[k] = ucb[k].min(u + 1);
            arms.push(ArmRound {
                arm: k,
                l,
                u,
                lcb_index: lcb[k],
                ucb_index: ucb[k],
                lcb: x[lcb[k]],
                ucb: x[ucb[k]],
                pulls: oracle.ledger().total_pulls - before,
            });
        }
        let best_lcb = max_or_neg_inf(active.iter().map(|&a| x[lcb[a]]));
        let survivors: Vec<usize> = active.iter().copied().filter(|&k| x[ucb[k]] > best_lcb).collect();
        log::debug!(
            "round {t}: delta_t = {delta_t}, active = {active:?}, survivors = {survivors:?}, pulls = {}",
            oracle.ledger().total_pulls
        );
        rounds.push(RoundTrace {
            t,
            delta_t,
            active: active.clone(),
            call_delta,
            arms,
            survivors: survivors.clone(),
        });
        active = survivors;
        t += 1;
    }
    let qualifying: Vec<usize> = active
        .iter()
        .copied()
        .filter(|&k| x[lcb[k]] >= max_other(&active, k, &ucb, x) - gap_to_stop)
        .collect();
    if active.is_empty() {
        log::warn!("no active arm left; returning no decision");
    } else if qualifying.len() > 1 {
        log::debug!("several arms qualify for return: {qualifying:?}");
    }
    Ok(RunResult {
        returned_arm: qualifying.first().copied(),
        qualifying,
        final_active: active,
        ledger: oracle.ledger().clone(),
        rounds,
        terminated: true,
        n: grid.n(),
        eps_tilde: grid.eps_tilde(),
    })
}

fn max_other<T: Real>(active: &[usize], k: usize, ucb: &[usize], x: &[T]) -> T {
    max_or_neg_inf(active.iter().filter(|&&a| a != k).map(|&a| x[ucb[a]]))
}

/// The loop condition: every active arm's lower bound is still more than
/// `(c+1)ε̃` below the best upper bound among the other active arms.
fn keep_going<T: Real>(active: &[usize], lcb: &[usize], ucb: &[usize], x: &[T], gap: T) -> bool {
    !active.is_empty()
        && active
            .iter()
            .all(|&k| x[lcb[k]] < max_other(active, k, ucb, x) - gap)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// `LCB < Q(q) <= Q⁺(q) <= UCB`.
    Bracket,
    /// `Q⁺(q - Δ^(t)) <= LCB + ε̃`.
    LowerApprox,
    /// `UCB < Q(q + Δ^(t)) + ε̃`.
    UpperApprox,
    /// `LCB` decreased or `UCB` increased between rounds.
    Monotonicity,
    /// A bound is not one of `0, ε̃, …, λ`.
    OffGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundViolation {
    pub t: u32,
    pub arm: usize,
    pub kind: BoundKind,
}

/// Checks the per-round confidence-bound guarantees of a trace against the
/// true quantiles.
///
/// `LCB + ε̃` and `UCB - ε̃` are read off the grid as the neighboring points,
/// so the comparisons involve no rounding. An arm whose `q`-quantile is
/// exactly 0 keeps its initial `LCB = 0`, which is not counted against the
/// strict lower bracket.
pub fn check_anytime_bounds<T: Real>(run: &RunResult<T>, inst: &Instance<T>, cfg: &AlgoConfig<T>) -> Vec<BoundViolation> {
    let grid = cfg.grid();
    let x = grid.points();
    let top = grid.top();
    let q = inst.q();
    let mut out = Vec::new();
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; inst.num_arms()];
    for r in &run.rounds {
        for a in &r.arms {
            let k = a.arm;
            let mut flag = |kind| out.push(BoundViolation { t: r.t, arm: k, kind });
            let d = inst.arm(k);
            let on_grid = (1..=top).contains(&a.lcb_index)
                && (1..=top).contains(&a.ucb_index)
                && a.lcb == x[a.lcb_index]
                && a.ucb == x[a.ucb_index];
            if !on_grid {
                flag(BoundKind::OffGrid);
                continue;
            }
            let (lo, hi) = prev[k].unwrap_or((1, top));
            if a.lcb_index < lo || a.ucb_index > hi {
                flag(BoundKind::Monotonicity);
            }
            prev[k] = Some((a.lcb_index, a.ucb_index));
            let qk = d.lower_quantile(q);
            let lcb_ok = a.lcb < qk || (a.lcb_index == 1 && qk == T::zero());
            if !(lcb_ok && d.upper_quantile(q) <= a.ucb) {
                flag(BoundKind::Bracket);
            }
            let lcb_plus = if a.lcb_index < top {
                x[a.lcb_index + 1]
            } else {
                x[top] + grid.eps_tilde()
            };
            if !(d.upper_quantile(q - r.delta_t) <= lcb_plus) {
                flag(BoundKind::LowerApprox);
            }
            let ucb_minus = if a.ucb_index > 1 {
                x[a.ucb_index - 1]
            } else {
                -grid.eps_tilde()
            };
            if !(ucb_minus < d.lower_quantile((q + r.delta_t).min(T::one()))) {
                flag(BoundKind::UpperApprox);
            }
        }
    }
    out
}

/// Pull-count bound with unit constant:
/// `Σ_k max(Δ_k, Δ)⁻² (ln(1/δ) + ln(1/max(Δ_k, Δ)) + ln(cλK/ε))`, where
/// `Δ` is the largest gap among satisfying arms. `+∞` if that gap is 0.
pub fn predicted_pull_bound<T: Real>(inst: &Instance<T>, cfg: &AlgoConfig<T>) -> Result<T, EngineError> {
    let gcfg = GapConfig::new(cfg.lambda, cfg.eps, crate::gaps::CParam::Finite(cfg.c))?;
    let gaps = arm_gaps(inst, &gcfg, Variant::Plain)?;
    let sat = crate::dist::satisfying_set(inst, cfg.eps);
    let big = max_or_neg_inf(sat.members.iter().map(|&k| gaps[k].gap));
    if !(big > T::zero()) {
        return Ok(T::infinity());
    }
    let k_arms = T::lit(inst.num_arms() as f64);
    let common = (T::one() / cfg.delta).ln() + (T::lit(f64::from(cfg.c)) * cfg.lambda * k_arms / cfg.eps).ln();
    Ok(gaps.iter().fold(T::zero(), |s, g| {
        let d = g.gap.max(big);
        s + (common + (T::one() / d).ln()) / (d * d)
    }))
}
