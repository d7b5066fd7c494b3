#![allow(dead_code)]

use proptest::prelude::*;
use qbai::{Instance, RewardDistribution};

/// Step, continuous and mixed distributions on roughly `[-0.3, 1.3]`.
pub fn distribution() -> impl Strategy<Value = RewardDistribution> {
    let discrete = prop::collection::vec((-0.3f64..1.3, 0.05f64..1.0), 1..5).prop_map(|atoms| {
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        let support = atoms.into_iter().map(|(v, m)| (v, m / total)).collect();
        RewardDistribution::discrete(support).unwrap()
    });
    let uniform = (-0.3f64..1.0, 0.05f64..0.8)
        .prop_map(|(a, w)| RewardDistribution::uniform(a, a + w).unwrap());
    let mixture = (0.0f64..0.9).prop_map(|w| RewardDistribution::dirac_uniform_mixture(w).unwrap());
    let piecewise = (-0.3f64..0.5, 0.1f64..0.6, 0.0f64..1.0, 0.01f64..0.5, 0.0f64..1.2).prop_map(
        |(x0, w, level, atom, ax)| {
            let g = 1.0 - atom;
            let mid = (level * g).min(g);
            RewardDistribution::piecewise(vec![(x0, 0.0), (x0 + w, mid), (x0 + 2.0 * w, g)], vec![(ax, atom)])
                .unwrap()
        },
    );
    prop_oneof![discrete, uniform, mixture, piecewise]
}

/// Instances with `λ = 1`; candidates whose `q`-quantiles leave `[0, 1]` are
/// rejected.
pub fn instance(max_arms: usize) -> impl Strategy<Value = Instance> {
    (prop::collection::vec(distribution(), 1..=max_arms), 0.2f64..0.8)
        .prop_filter_map("quantile outside [0, λ]", |(arms, q)| Instance::new(arms, q, 1.0).ok())
}

/// Smallest `x` with `F(x) >= p`, by bisection on the CDF alone.
pub fn invert_lower(d: &RewardDistribution, p: f64) -> f64 {
    let (mut lo, mut hi) = (-10.0, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if d.cdf(mid) >= p {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Largest `x` with `F(x) <= p`.
pub fn invert_upper(d: &RewardDistribution, p: f64) -> f64 {
    let (mut lo, mut hi) = (-10.0, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if d.cdf(mid) <= p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
