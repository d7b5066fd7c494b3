//! Grid-scan reference for the gap definitions.
//!
//! Deliberately naive: every predicate is written out again from the
//! quantile functions and evaluated on `{0, h, 2h, …, min(q, 1-q)}`. Used only
//! to cross-check the bisection solvers.

use crate::dist::{satisfying_set, Instance};
use crate::real::Real;

use super::{CParam, GapConfig, GapError, Variant, MAX_FREE_ARMS};

fn scan<T: Real>(hi: T, step: T, pred: impl Fn(T) -> bool) -> T {
    let mut best = T::zero();
    if !pred(T::zero()) {
        return best;
    }
    let steps = (hi / step).floor().to_usize().unwrap_or(0);
    for i in 1..=steps {
        let d = T::lit(i as f64) * step;
        if pred(d) {
            best = d;
        }
    }
    if hi > best && pred(hi) {
        best = hi;
    }
    best
}

fn prob<T: Real>(p: T) -> T {
    if p < T::zero() {
        T::zero()
    } else if p > T::one() {
        T::one()
    } else {
        p
    }
}

fn lower<T: Real>(inst: &Instance<T>, a: usize, p: T, v: Variant) -> T {
    let x = inst.arm(a).lower_quantile(prob(p));
    if v == Variant::Clipped && x > inst.lambda() {
        inst.lambda()
    } else {
        x
    }
}

fn upper<T: Real>(inst: &Instance<T>, a: usize, p: T, v: Variant) -> T {
    let x = inst.arm(a).upper_quantile(prob(p));
    if v == Variant::Clipped && x < T::zero() {
        T::zero()
    } else {
        x
    }
}

fn eps_terms<T: Real>(cfg: &GapConfig<T>) -> (T, T) {
    match cfg.c {
        CParam::Infinite => (T::zero(), cfg.eps),
        CParam::Finite(c) => {
            let n = crate::grid::grid_size(cfg.lambda, cfg.eps, c);
            let et = cfg.lambda / T::lit(n as f64);
            (et, T::lit(f64::from(c)) * et)
        }
    }
}

/// Scanned gaps of all arms for one variant.
pub fn gaps_bruteforce<T: Real>(
    inst: &Instance<T>,
    cfg: &GapConfig<T>,
    variant: Variant,
    step: T,
) -> Result<Vec<T>, GapError> {
    let q = inst.q();
    let cap = q.min(T::one() - q);
    let (eps_tilde, c_eps) = eps_terms(cfg);
    let k_arms = inst.num_arms();
    let sat = satisfying_set(inst, cfg.eps);
    let free: Vec<usize> = (0..k_arms).filter(|a| !sat.contains(*a)).collect();
    if free.len() > MAX_FREE_ARMS {
        return Err(GapError::TooManyFreeArms { free: free.len() });
    }
    let mut gaps = vec![T::zero(); k_arms];
    for &k in &free {
        gaps[k] = scan(cap, step, |d| {
            let mut rhs = T::neg_infinity();
            for a in 0..k_arms {
                let u = upper(inst, a, q - d, variant);
                if u > rhs {
                    rhs = u;
                }
            }
            lower(inst, k, q + d, variant) <= rhs - eps_tilde
        });
    }
    for &k in &sat.members {
        let mut best = T::zero();
        for mask in 0usize..(1 << free.len()) {
            let in_s = |a: usize| sat.contains(a) || free.iter().position(|&f| f == a).is_some_and(|b| mask >> b & 1 == 1);
            let mut hi = cap;
            for &a in &free {
                if !in_s(a) && gaps[a] < hi {
                    hi = gaps[a];
                }
            }
            let g = scan(hi, step, |d| {
                let mut rhs = T::neg_infinity();
                for a in (0..k_arms).filter(|&a| a != k && in_s(a)) {
                    let l = lower(inst, a, q + d, variant);
                    if l > rhs {
                        rhs = l;
                    }
                }
                upper(inst, k, q - d, variant) >= rhs - c_eps
            });
            if g > best {
                best = g;
            }
        }
        gaps[k] = best;
    }
    Ok(gaps)
}

fn best_arm<T: Real>(inst: &Instance<T>) -> Result<usize, GapError> {
    let qs: Vec<T> = (0..inst.num_arms()).map(|a| inst.arm(a).lower_quantile(inst.q())).collect();
    let mut best = 0;
    for a in 1..qs.len() {
        if qs[a] > qs[best] {
            best = a;
        }
    }
    if (0..qs.len()).filter(|&a| qs[a] == qs[best]).count() > 1 {
        return Err(GapError::TiedBest);
    }
    Ok(best)
}

/// Scanned best-arm-relative gaps; the best arm takes the smallest gap among
/// the highest-quantile suboptimal arms.
pub fn nkss_bruteforce<T: Real>(inst: &Instance<T>, step: T) -> Result<Vec<T>, GapError> {
    let q = inst.q();
    let cap = q.min(T::one() - q);
    let best = best_arm(inst)?;
    let k_arms = inst.num_arms();
    let mut gaps: Vec<T> = (0..k_arms)
        .map(|k| {
            scan(cap, step, |d| {
                inst.arm(k).lower_quantile(prob(q + d)) <= inst.arm(best).lower_quantile(prob(q - d))
            })
        })
        .collect();
    let qs: Vec<T> = (0..k_arms).map(|a| inst.arm(a).lower_quantile(q)).collect();
    let mut runner_up = T::neg_infinity();
    for a in (0..k_arms).filter(|&a| a != best) {
        if qs[a] > runner_up {
            runner_up = qs[a];
        }
    }
    let mut g = cap;
    for a in (0..k_arms).filter(|&a| a != best && qs[a] == runner_up) {
        if gaps[a] < g {
            g = gaps[a];
        }
    }
    gaps[best] = g;
    Ok(gaps)
}

/// Scanned gaps against the best of all arms.
pub fn hr_bruteforce<T: Real>(inst: &Instance<T>, step: T) -> Result<Vec<T>, GapError> {
    let q = inst.q();
    let cap = q.min(T::one() - q);
    let best = best_arm(inst)?;
    let k_arms = inst.num_arms();
    let mut gaps = vec![T::zero(); k_arms];
    for k in (0..k_arms).filter(|&k| k != best) {
        gaps[k] = scan(cap, step, |d| {
            let mut rhs = T::neg_infinity();
            for a in 0..k_arms {
                let l = inst.arm(a).lower_quantile(prob(q - d));
                if l > rhs {
                    rhs = l;
                }
            }
            inst.arm(k).lower_quantile(prob(q + d)) <= rhs
        });
    }
    gaps[best] = hr_best_bruteforce(inst, &gaps, step)?;
    Ok(gaps)
}

/// Scanned HR gap of the best arm given the other arms' HR gaps.
///
/// The best arm's gap moves by the other arms' gap errors times a ratio of
/// quantile slopes, which can be large; passing exact suboptimal gaps here
/// isolates the scan of the best arm's own predicate.
pub fn hr_best_bruteforce<T: Real>(inst: &Instance<T>, suboptimal_gaps: &[T], step: T) -> Result<T, GapError> {
    let q = inst.q();
    let best = best_arm(inst)?;
    let mut target = T::neg_infinity();
    for a in (0..inst.num_arms()).filter(|&a| a != best) {
        let l = inst.arm(a).lower_quantile(prob(q + suboptimal_gaps[a]));
        if l > target {
            target = l;
        }
    }
    Ok(scan(q.min(T::one() - q), step, |d| {
        inst.arm(best).lower_quantile(prob(q - d)) >= target
    }))
}
