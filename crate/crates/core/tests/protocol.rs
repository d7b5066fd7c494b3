mod common;

use proptest::prelude::*;
use qbai::channel::{Channel, ThresholdOracle, ThresholdQuery};
use qbai::dist::{lower_bound_instance, RewardDistribution};
use qbai::engine::{check_anytime_bounds, run, AlgoConfig, BoundKind};
use qbai::grid::Grid;
use qbai::quantest::{quant_est, valid_indices, MnbsParams, Posterior};
use qbai::Instance;

fn query(arm: usize, threshold: f64) -> ThresholdQuery<f64> {
    ThresholdQuery { arm, threshold, round: 0 }
}

/// Consecutive bits at a fixed threshold are independent: 2x2 χ² on
/// (previous, current) pairs stays below the 0.1% critical value 10.83.
#[test]
fn channel_is_memoryless() {
    let inst = Instance::new(vec![RewardDistribution::dirac_uniform_mixture(0.2).unwrap()], 0.5, 1.0).unwrap();
    for seed in 0..5 {
        let mut ch = Channel::new(&inst, seed);
        let bits: Vec<bool> = (0..40_000).map(|_| ch.query(query(0, 0.4)).bit).collect();
        let mut table = [[0f64; 2]; 2];
        for w in bits.windows(2) {
            table[w[0] as usize][w[1] as usize] += 1.0;
        }
        let total: f64 = table.iter().flatten().sum();
        let mut chi2 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let row: f64 = table[i].iter().sum();
                let col = table[0][j] + table[1][j];
                let expected = row * col / total;
                chi2 += (table[i][j] - expected).powi(2) / expected;
            }
        }
        assert!(chi2 < 10.83, "seed {seed}: chi2 = {chi2}");
        let rate = bits.iter().filter(|&&b| b).count() as f64 / bits.len() as f64;
        assert!((rate - 0.52).abs() < 0.01, "rate {rate}");
    }
}

#[test]
fn quantest_spends_exactly_its_budget() {
    let d = RewardDistribution::discrete(vec![(0.1, 0.3), (0.45, 0.4), (0.8, 0.3)]).unwrap();
    let inst = Instance::new(vec![d.clone()], 0.5, 1.0).unwrap();
    let grid = Grid::new(1.0, 0.1, 1);
    let params = MnbsParams::new(0.5, 0.1, 0.05);
    let mut ch = Channel::new(&inst, 3);
    let out = quant_est(&mut ch, 0, grid.points(), &params, 1).unwrap();
    assert_eq!(out.queries, params.max_steps(grid.intervals()));
    assert_eq!(out.pulls + out.sentinel_queries, out.queries);
    assert!(valid_indices(&d, grid.points(), 0.5, 0.1).contains(&out.index));
}

#[test]
fn deterministic_arms_always_resolve() {
    let grid = Grid::new(1.0, 0.1, 1);
    for r in [0.0, 0.05, 0.33, 0.5, 0.95, 1.0] {
        let d = RewardDistribution::deterministic(r).unwrap();
        let inst = Instance::new(vec![d.clone()], 0.5, 1.0).unwrap();
        for tau in [0.1, 0.5, 0.9] {
            let delta = 0.05;
            let valid = valid_indices(&d, grid.points(), tau, delta);
            for seed in 0..20 {
                let mut ch = Channel::new(&inst, seed);
                let out = quant_est(&mut ch, 0, grid.points(), &MnbsParams::new(tau, delta, 0.1), 1).unwrap();
                assert!(valid.contains(&out.index), "r = {r}, tau = {tau}: got {}", out.index);
            }
        }
    }
}

proptest! {
    #[test]
    fn posterior_stays_normalized(
        m in 2usize..60,
        tau in 0.05f64..0.95,
        bits in prop::collection::vec(any::<bool>(), 1..3000),
    ) {
        let mut post = Posterior::uniform(m, tau);
        let up = 0.05 / tau;
        let down = 0.05 / (1.0 - tau);
        for bit in bits {
            let s = post.next_point();
            post.update(s, bit, up.min(0.5), down.min(0.5));
            let w = post.weights();
            prop_assert!(w.iter().all(|&v| v >= 0.0));
            let sum = w.iter().sum::<f64>();
            prop_assert!((sum - 1.0).abs() < 1e-12, "sum {sum}");
        }
    }
}

fn ledger_consistent(inst: &Instance, cfg: &AlgoConfig<f64>, seed: u64) {
    let res = run(&mut Channel::new(inst, seed), cfg).unwrap();
    let l = &res.ledger;
    assert_eq!(l.total_pulls, l.pulls_per_arm.iter().sum::<u64>());
    assert_eq!(l.total_pulls, l.uplink_bits);
    let per_round: u64 = res.rounds.iter().flat_map(|r| r.arms.iter().map(|a| a.pulls)).sum();
    assert_eq!(per_round, l.total_pulls);
}

#[test]
fn deterministic_instances_never_fail() {
    let cases: Vec<(Vec<f64>, f64, usize)> = vec![
        (vec![0.2, 0.8], 0.5, 1),
        (vec![0.8, 0.2, 0.5], 0.3, 0),
        (vec![0.1, 0.15, 0.9, 0.6], 0.7, 2),
        (vec![0.45, 0.55], 0.5, 1),
    ];
    for (rewards, q, best) in cases {
        let arms = rewards.iter().map(|&r| RewardDistribution::deterministic(r).unwrap()).collect();
        let inst = Instance::new(arms, q, 1.0).unwrap();
        let cfg = AlgoConfig::new(1.0, 0.05, q, 0.1, 2).unwrap();
        for seed in 0..20 {
            let res = run(&mut Channel::new(&inst, seed), &cfg).unwrap();
            assert!(res.terminated);
            assert_eq!(res.returned_arm, Some(best), "{rewards:?}, seed {seed}");
            assert!(res.final_active.contains(&best));
            assert_eq!(check_anytime_bounds(&res, &inst, &cfg), vec![]);
            assert!(res.failure_budget_spent() <= cfg.delta);
        }
        ledger_consistent(&inst, &cfg, 1);
    }
}

#[test]
fn stochastic_runs_keep_monotone_grid_bounds() {
    let inst = lower_bound_instance(3, 1.0 / 6.0, None, 0.5).unwrap();
    let cfg = AlgoConfig::new(1.0, 0.0375, 0.5, 0.1, 2).unwrap();
    let mut correct = 0;
    for seed in 0..30 {
        let res = run(&mut Channel::new(&inst, seed), &cfg).unwrap();
        correct += usize::from(res.returned_arm == Some(0));
        for v in check_anytime_bounds(&res, &inst, &cfg) {
            assert!(!matches!(v.kind, BoundKind::Monotonicity | BoundKind::OffGrid), "{v:?}");
        }
        for r in &res.rounds {
            for a in r.arms.iter().filter(|a| r.survivors.contains(&a.arm)) {
                assert!(a.lcb < a.ucb);
            }
        }
    }
    assert!(correct >= 25, "{correct}/30");
    ledger_consistent(&inst, &cfg, 2);
}
