//! Arm gaps: the instance-dependent difficulty of telling arms apart.
//!
//! Every gap is the supremum of a downward-closed set of `Δ`, found by
//! bisection on a monotone predicate. Non-satisfying arms are solved first
//! because the search range of a satisfying arm depends on their gaps.

pub mod bruteforce;

use serde::Serialize;
use thiserror::Error;

use crate::dist::{satisfying_set, Instance, SatisfyingSet};
use crate::grid::{ceil_tolerant, grid_size};
use crate::real::{clamp_prob, max_or_neg_inf, min_or_inf, Real};

/// Largest number of non-satisfying arms for which subsets are enumerated.
pub const MAX_FREE_ARMS: usize = 20;

#[derive(Debug, Error, PartialEq)]
pub enum GapError {
    #[error("invalid gap configuration: {0}")]
    InvalidConfig(String),
    #[error("arm {0} is out of range")]
    ArmOutOfRange(usize),
    #[error("arm {0} is ε-satisfying")]
    Satisfying(usize),
    #[error("arm {0} is not ε-satisfying")]
    NotSatisfying(usize),
    #[error("{free} non-satisfying arms exceed the subset enumeration cap of {MAX_FREE_ARMS}")]
    TooManyFreeArms { free: usize },
    #[error("best arm is not unique")]
    TiedBest,
}

/// Discretization multiplier `c`, or its limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CParam {
    Finite(u32),
    Infinite,
}

impl std::fmt::Display for CParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CParam::Finite(c) => write!(f, "{c}"),
            CParam::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct GapConfig<T> {
    pub lambda: T,
    pub eps: T,
    pub c: CParam,
    pub bisection_tol: T,
}

impl<T: Real> GapConfig<T> {
    pub fn new(lambda: T, eps: T, c: CParam) -> Result<Self, GapError> {
        let cfg = Self {
            lambda,
            eps,
            c,
            bisection_tol: T::lit(1e-9),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), GapError> {
        if !(self.eps > T::zero() && self.lambda > self.eps && self.lambda.is_finite()) {
            return Err(GapError::InvalidConfig(format!(
                "need lambda > eps > 0, got lambda = {}, eps = {}",
                self.lambda, self.eps
            )));
        }
        if self.c == CParam::Finite(0) {
            return Err(GapError::InvalidConfig("c must be at least 1".into()));
        }
        if !(self.bisection_tol > T::zero()) {
            return Err(GapError::InvalidConfig("bisection tolerance must be positive".into()));
        }
        Ok(())
    }

    /// Same configuration with another `c`.
    pub fn with_c(&self, c: CParam) -> Self {
        Self { c, ..*self }
    }

    /// `n`, or `None` in the limit.
    pub fn grid_size(&self) -> Option<usize> {
        match self.c {
            CParam::Finite(c) => Some(grid_size(self.lambda, self.eps, c)),
            CParam::Infinite => None,
        }
    }

    /// `ε̃ = λ/n`; 0 in the limit.
    pub fn eps_tilde(&self) -> T {
        match self.grid_size() {
            Some(n) => self.lambda / T::lit(n as f64),
            None => T::zero(),
        }
    }

    /// `c ε̃`; `ε` in the limit.
    pub fn c_eps_tilde(&self) -> T {
        match self.c {
            CParam::Finite(c) => T::lit(f64::from(c)) * self.eps_tilde(),
            CParam::Infinite => self.eps,
        }
    }
}

/// Which quantile terms enter the predicates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Lower quantiles on the right side, upper quantiles on the left.
    Plain,
    /// Lower quantiles capped at `λ`, upper quantiles floored at 0.
    Clipped,
}

/// Quantile terms with optional clipping.
struct Terms<'a, T> {
    inst: &'a Instance<T>,
    variant: Variant,
}

impl<T: Real> Terms<'_, T> {
    fn lower(&self, k: usize, p: T) -> T {
        let v = self.inst.arm(k).lower_quantile(clamp_prob(p));
        match self.variant {
            Variant::Plain => v,
            Variant::Clipped => v.min(self.inst.lambda()),
        }
    }

    fn upper(&self, k: usize, p: T) -> T {
        let v = self.inst.arm(k).upper_quantile(clamp_prob(p));
        match self.variant {
            Variant::Plain => v,
            Variant::Clipped => v.max(T::zero()),
        }
    }
}

/// `sup{Δ ∈ [0, hi] : pred(Δ)}` for a downward-closed predicate; 0 when the
/// set is empty. Returns a point where the predicate holds.
pub fn bisect_sup<T: Real>(hi: T, tol: T, pred: impl Fn(T) -> bool) -> T {
    if !(hi > T::zero()) || !pred(T::zero()) {
        return T::zero();
    }
    if pred(hi) {
        return hi;
    }
    let (mut lo, mut hi) = (T::zero(), hi);
    for _ in 0..80 {
        if hi - lo < tol {
            break;
        }
        let mid = (lo + hi) * T::half();
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `min(q, 1 - q)`, the cap of every gap.
pub fn gap_cap<T: Real>(q: T) -> T {
    q.min(T::one() - q)
}

fn check_arm<T: Real>(inst: &Instance<T>, k: usize) -> Result<(), GapError> {
    if k >= inst.num_arms() {
        return Err(GapError::ArmOutOfRange(k));
    }
    Ok(())
}

fn nonsat_gap<T: Real>(terms: &Terms<'_, T>, k: usize, eps_tilde: T, tol: T) -> T {
    let q = terms.inst.q();
    let arms = terms.inst.num_arms();
    bisect_sup(gap_cap(q), tol, |d| {
        let rhs = max_or_neg_inf((0..arms).map(|a| terms.upper(a, q - d))) - eps_tilde;
        terms.lower(k, q + d) <= rhs
    })
}

fn subset_gap<T: Real>(terms: &Terms<'_, T>, k: usize, subset: &[usize], hi: T, c_eps: T, tol: T) -> T {
    let q = terms.inst.q();
    bisect_sup(hi, tol, |d| {
        let rhs = max_or_neg_inf(
            subset
                .iter()
                .filter(|&&a| a != k)
                .map(|&a| terms.lower(a, q + d)),
        ) - c_eps;
        terms.upper(k, q - d) >= rhs
    })
}

/// Gap of a non-satisfying arm (plain quantile terms).
pub fn gap_nonsatisfying<T: Real>(inst: &Instance<T>, k: usize, cfg: &GapConfig<T>) -> Result<T, GapError> {
    gap_nonsatisfying_variant(inst, k, cfg, Variant::Plain)
}

pub fn gap_nonsatisfying_variant<T: Real>(
    inst: &Instance<T>,
    k: usize,
    cfg: &GapConfig<T>,
    variant: Variant,
) -> Result<T, GapError> {
    cfg.validate()?;
    check_arm(inst, k)?;
    if satisfying_set(inst, cfg.eps).contains(k) {
        return Err(GapError::Satisfying(k));
    }
    let terms = Terms { inst, variant };
    Ok(nonsat_gap(&terms, k, cfg.eps_tilde(), cfg.bisection_tol))
}

/// Gap of a satisfying arm together with the subset attaining it.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct SubsetGap<T> {
    pub gap: T,
    /// Ascending 0-based arm indices.
    pub subset: Vec<usize>,
}

/// Gap of a satisfying arm, maximized over subsets `S ⊇ A_ε`.
///
/// `nonsat_gaps[a]` must hold the gap of every non-satisfying arm `a`; entries
/// for satisfying arms are ignored. Ties between subsets keep the one
/// enumerated first (smallest bitmask over the free arms).
pub fn gap_satisfying<T: Real>(
    inst: &Instance<T>,
    k: usize,
    cfg: &GapConfig<T>,
    nonsat_gaps: &[T],
) -> Result<SubsetGap<T>, GapError> {
    gap_satisfying_variant(inst, k, cfg, nonsat_gaps, Variant::Plain)
}

pub fn gap_satisfying_variant<T: Real>(
    inst: &Instance<T>,
    k: usize,
    cfg: &GapConfig<T>,
    nonsat_gaps: &[T],
    variant: Variant,
) -> Result<SubsetGap<T>, GapError> {
    cfg.validate()?;
    check_arm(inst, k)?;
    let sat = satisfying_set(inst, cfg.eps);
    if !sat.contains(k) {
        return Err(GapError::NotSatisfying(k));
    }
    let free: Vec<usize> = (0..inst.num_arms()).filter(|&a| !sat.contains(a)).collect();
    if free.len() > MAX_FREE_ARMS {
        return Err(GapError::TooManyFreeArms { free: free.len() });
    }
    let terms = Terms { inst, variant };
    let cap = gap_cap(inst.q());
    let c_eps = cfg.c_eps_tilde();
    let mut best: Option<SubsetGap<T>> = None;
    for mask in 0u32..(1u32 << free.len()) {
        let mut subset = sat.members.clone();
        let mut hi = cap;
        for (bit, &a) in free.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                subset.push(a);
            } else {
                hi = hi.min(nonsat_gaps[a]);
            }
        }
        subset.sort_unstable();
        let gap = subset_gap(&terms, k, &subset, hi, c_eps, cfg.bisection_tol);
        if best.as_ref().is_none_or(|b| gap > b.gap) {
            best = Some(SubsetGap { gap, subset });
        }
    }
    Ok(best.expect("at least the empty extension is enumerated"))
}

/// Per-arm gap with the maximizing subset for satisfying arms.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct ArmGap<T> {
    pub gap: T,
    pub subset: Option<Vec<usize>>,
}

/// Gaps of all arms under one variant and `c`.
pub fn arm_gaps<T: Real>(inst: &Instance<T>, cfg: &GapConfig<T>, variant: Variant) -> Result<Vec<ArmGap<T>>, GapError> {
    cfg.validate()?;
    let sat = satisfying_set(inst, cfg.eps);
    let terms = Terms { inst, variant };
    let k_arms = inst.num_arms();
    let mut nonsat = vec![T::nan(); k_arms];
    for k in (0..k_arms).filter(|&k| !sat.contains(k)) {
        nonsat[k] = nonsat_gap(&terms, k, cfg.eps_tilde(), cfg.bisection_tol);
    }
    (0..k_arms)
        .map(|k| {
            if sat.contains(k) {
                let sg = gap_satisfying_variant(inst, k, cfg, &nonsat, variant)?;
                Ok(ArmGap {
                    gap: sg.gap,
                    subset: Some(sg.subset),
                })
            } else {
                Ok(ArmGap {
                    gap: nonsat[k],
                    subset: None,
                })
            }
        })
        .collect()
}

/// Modified gap of arm `k`: quantile terms clipped to `[0, λ]`.
pub fn gap_modified<T: Real>(inst: &Instance<T>, k: usize, cfg: &GapConfig<T>) -> Result<T, GapError> {
    check_arm(inst, k)?;
    Ok(arm_gaps(inst, cfg, Variant::Clipped)?[k].gap)
}

/// Instance gap `Δ`: the largest gap among satisfying arms.
pub fn instance_gap<T: Real>(inst: &Instance<T>, cfg: &GapConfig<T>, variant: Variant) -> Result<T, GapError> {
    let gaps = arm_gaps(inst, cfg, variant)?;
    let sat = satisfying_set(inst, cfg.eps);
    Ok(max_or_neg_inf(sat.members.iter().map(|&k| gaps[k].gap)))
}

/// The unique arm with the highest `q`-quantile.
pub fn unique_best<T: Real>(inst: &Instance<T>) -> Result<usize, GapError> {
    let qs = inst.quantiles();
    let best = max_or_neg_inf(qs.iter().copied());
    let mut winners = (0..qs.len()).filter(|&k| qs[k] == best);
    let first = winners.next().expect("instance has arms");
    if winners.next().is_some() {
        return Err(GapError::TiedBest);
    }
    Ok(first)
}

fn nkss_suboptimal<T: Real>(inst: &Instance<T>, k: usize, best: usize, tol: T) -> T {
    let q = inst.q();
    bisect_sup(gap_cap(q), tol, |d| {
        inst.arm(k).lower_quantile(clamp_prob(q + d)) <= inst.arm(best).lower_quantile(clamp_prob(q - d))
    })
}

fn hr_suboptimal<T: Real>(inst: &Instance<T>, k: usize, tol: T) -> T {
    let q = inst.q();
    bisect_sup(gap_cap(q), tol, |d| {
        let rhs = max_or_neg_inf(inst.arms().iter().map(|a| a.lower_quantile(clamp_prob(q - d))));
        inst.arm(k).lower_quantile(clamp_prob(q + d)) <= rhs
    })
}

/// Gap comparing each suboptimal arm with the best arm only. The best arm
/// takes the gap of the highest-quantile suboptimal arm.
pub fn gap_nkss<T: Real>(inst: &Instance<T>, k: usize, tol: T) -> Result<T, GapError> {
    check_arm(inst, k)?;
    let best = unique_best(inst)?;
    if k != best {
        return Ok(nkss_suboptimal(inst, k, best, tol));
    }
    let qs = inst.quantiles();
    let runner_up = max_or_neg_inf((0..qs.len()).filter(|&a| a != best).map(|a| qs[a]));
    Ok(min_or_inf(
        (0..qs.len())
            .filter(|&a| a != best && qs[a] == runner_up)
            .map(|a| nkss_suboptimal(inst, a, best, tol)),
    )
    .min(gap_cap(inst.q())))
}

/// Gap comparing each suboptimal arm with the best of all arms; the best
/// arm's gap is measured against the others' gaps. Both ranges are capped at
/// `min(q, 1 - q)`.
pub fn gap_hr<T: Real>(inst: &Instance<T>, k: usize, tol: T) -> Result<T, GapError> {
    check_arm(inst, k)?;
    let best = unique_best(inst)?;
    if k != best {
        return Ok(hr_suboptimal(inst, k, tol));
    }
    let q = inst.q();
    let rhs = max_or_neg_inf((0..inst.num_arms()).filter(|&a| a != best).map(|a| {
        let d = hr_suboptimal(inst, a, tol);
        inst.arm(a).lower_quantile(clamp_prob(q + d))
    }));
    Ok(bisect_sup(gap_cap(q), tol, |d| {
        inst.arm(best).lower_quantile(clamp_prob(q - d)) >= rhs
    }))
}

/// `max(1, ⌈2θ/(1-θ)⌉)`: the smallest `c` the rule of thumb allows for
/// `c ε̃ >= θ ε`.
pub fn choose_c(theta: f64) -> Result<u32, GapError> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(GapError::InvalidConfig(format!("theta = {theta} outside (0, 1)")));
    }
    Ok(ceil_tolerant(2.0 * theta / (1.0 - theta)).max(1.0) as u32)
}

/// Whether `c ε̃ >= θ ε` for the grid built from `(λ, ε, c)`.
pub fn meets_theta<T: Real>(c: u32, theta: T, lambda: T, eps: T) -> bool {
    let n = grid_size(lambda, eps, c);
    T::lit(f64::from(c)) * lambda / T::lit(n as f64) >= theta * eps
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GapClass {
    PositiveGap,
    ZeroGap,
}

pub fn classify_instance<T: Real>(inst: &Instance<T>, cfg: &GapConfig<T>) -> Result<GapClass, GapError> {
    Ok(if instance_gap(inst, cfg, Variant::Plain)? > cfg.bisection_tol {
        GapClass::PositiveGap
    } else {
        GapClass::ZeroGap
    })
}

/// All gap variants of one arm. Subset indices are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct ArmGapRow<T> {
    pub arm: usize,
    pub satisfying: bool,
    pub ours: T,
    pub limit: T,
    pub modified: T,
    pub nkss: Option<T>,
    pub hr: Option<T>,
    pub best_subset: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct GapReport<T> {
    pub config: GapConfig<T>,
    pub q: T,
    pub n: Option<usize>,
    pub eps_tilde: T,
    pub satisfying: SatisfyingSet<T>,
    /// Largest gap among satisfying arms.
    pub instance_gap: T,
    pub arms: Vec<ArmGapRow<T>>,
}

/// Every gap of every arm. The unique-best-arm gaps are `None` when the best
/// arm is tied.
pub fn gap_report<T: Real>(inst: &Instance<T>, cfg: &GapConfig<T>) -> Result<GapReport<T>, GapError> {
    let ours = arm_gaps(inst, cfg, Variant::Plain)?;
    let limit = arm_gaps(inst, &cfg.with_c(CParam::Infinite), Variant::Plain)?;
    let modified = arm_gaps(inst, cfg, Variant::Clipped)?;
    let satisfying = satisfying_set(inst, cfg.eps);
    let tied = unique_best(inst).is_err();
    let arms = (0..inst.num_arms())
        .map(|k| {
            Ok(ArmGapRow {
                arm: k,
                satisfying: satisfying.contains(k),
                ours: ours[k].gap,
                limit: limit[k].gap,
                modified: modified[k].gap,
                nkss: if tied { None } else { Some(gap_nkss(inst, k, cfg.bisection_tol)?) },
                hr: if tied { None } else { Some(gap_hr(inst, k, cfg.bisection_tol)?) },
                best_subset: ours[k].subset.clone(),
            })
        })
        .collect::<Result<Vec<_>, GapError>>()?;
    let instance_gap = max_or_neg_inf(satisfying.members.iter().map(|&k| ours[k].gap));
    Ok(GapReport {
        config: *cfg,
        q: inst.q(),
        n: cfg.grid_size(),
        eps_tilde: cfg.eps_tilde(),
        satisfying,
        instance_gap,
        arms,
    })
}
