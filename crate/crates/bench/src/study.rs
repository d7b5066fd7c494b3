//! Seeded Monte-Carlo reliability studies of the learner.

use std::time::Instant;

use qbai::channel::Channel;
use qbai::dist::{instance_to_json, satisfying_set};
use qbai::engine::{check_anytime_bounds, run, BoundKind};
use qbai::{AlgoConfig, Instance};
use rayon::prelude::*;
use serde::Serialize;

use crate::output::{opt_cell, to_csv, to_sorted_json};
use crate::{Result, VERSION};

/// One trial's summary. Arm indices are 0-based in memory and 1-based in
/// every rendered output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub seed: u64,
    pub returned_arm: Option<usize>,
    pub correct: bool,
    pub terminated: bool,
    pub total_pulls: u64,
    pub sentinel_queries: u64,
    pub rounds: usize,
    pub pulls_per_arm: Vec<u64>,
    /// Failure budget the trace spent across its quantile searches.
    pub budget_spent: f64,
    /// Confidence-bound violations against the true quantiles.
    pub bound_violations: usize,
    /// Monotonicity or grid-membership violations; these hold by construction.
    pub structural_violations: usize,
    /// Round-by-round max lower bound never decreased.
    pub max_lcb_monotone: bool,
    pub best_in_final_set: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregates {
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// 95% Wilson score interval.
    pub success_ci: [f64; 2],
    pub no_decision: usize,
    pub pulls_min: u64,
    pub pulls_median: f64,
    pub pulls_p90: u64,
    pub pulls_max: u64,
    pub mean_rounds: f64,
    pub trials_with_bound_violation: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyReport {
    pub version: &'static str,
    pub config: AlgoConfig,
    pub instance: serde_json::Value,
    /// 1-based.
    pub satisfying: Vec<usize>,
    pub base_seed: u64,
    pub aggregates: Aggregates,
    pub rows: Vec<TrialRow>,
}

pub fn wilson_interval(successes: usize, n: usize) -> [f64; 2] {
    if n == 0 {
        return [0.0, 1.0];
    }
    let z = 1.959_963_984_540_054_f64;
    let n = n as f64;
    let p = successes as f64 / n;
    let centre = (p + z * z / (2.0 * n)) / (1.0 + z * z / n);
    let half = z / (1.0 + z * z / n) * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt();
    [(centre - half).max(0.0), (centre + half).min(1.0)]
}

/// Median of unsorted values; the mean of the two middle values for even
/// counts.
pub fn median(values: &[u64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable();
    match v.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => v[n / 2] as f64,
        n => (v[n / 2 - 1] as f64 + v[n / 2] as f64) / 2.0,
    }
}

/// Nearest-rank quantile.
fn rank_quantile(sorted: &[u64], p: f64) -> u64 {
    let idx = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
    sorted[idx]
}

fn one_trial(inst: &Instance, cfg: &AlgoConfig, seed: u64, satisfying: &[usize], best: Option<usize>) -> Result<TrialRow> {
    let res = run(&mut Channel::new(inst, seed), cfg)?;
    let violations = check_anytime_bounds(&res, inst, cfg);
    let structural = violations
        .iter()
        .filter(|v| matches!(v.kind, BoundKind::Monotonicity | BoundKind::OffGrid))
        .count();
    let mut max_lcb = f64::NEG_INFINITY;
    let mut max_lcb_monotone = true;
    for r in &res.rounds {
        let m = r.arms.iter().map(|a| a.lcb).fold(f64::NEG_INFINITY, f64::max);
        max_lcb_monotone &= m >= max_lcb;
        max_lcb = m;
    }
    Ok(TrialRow {
        seed,
        returned_arm: res.returned_arm,
        correct: res.returned_arm.is_some_and(|k| satisfying.binary_search(&k).is_ok()),
        terminated: res.terminated,
        total_pulls: res.ledger.total_pulls,
        sentinel_queries: res.ledger.sentinel_queries,
        rounds: res.rounds.len(),
        pulls_per_arm: res.ledger.pulls_per_arm.clone(),
        budget_spent: res.failure_budget_spent(),
        bound_violations: violations.len() - structural,
        structural_violations: structural,
        max_lcb_monotone,
        best_in_final_set: best.is_none_or(|b| res.final_active.contains(&b)),
    })
}

/// Runs `trials` independent trials; trial `i` uses seed `base_seed + i`.
/// Rows come back in trial order whatever `jobs` is.
pub fn run_study(inst: &Instance, cfg: &AlgoConfig, trials: usize, base_seed: u64, jobs: Option<usize>) -> Result<StudyReport> {
    cfg.validate()?;
    let start = Instant::now();
    let satisfying = satisfying_set(inst, cfg.eps).members;
    let best = qbai::gaps::unique_best(inst).ok();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        pool = pool.num_threads(j);
    }
    let rows = pool.build()?.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|i| one_trial(inst, cfg, base_seed.wrapping_add(i as u64), &satisfying, best))
            .collect::<Result<Vec<_>>>()
    })?;
    log::info!("{trials} trials in {:.2}s", start.elapsed().as_secs_f64());
    let instance: serde_json::Value = serde_json::from_str(&instance_to_json(inst)?)?;
    Ok(StudyReport {
        version: VERSION,
        config: *cfg,
        instance,
        satisfying: satisfying.iter().map(|k| k + 1).collect(),
        base_seed,
        aggregates: aggregate(&rows),
        rows,
    })
}

pub fn aggregate(rows: &[TrialRow]) -> Aggregates {
    let n = rows.len();
    let successes = rows.iter().filter(|r| r.correct).count();
    let mut pulls: Vec<u64> = rows.iter().map(|r| r.total_pulls).collect();
    pulls.sort_unstable();
    Aggregates {
        trials: n,
        successes,
        success_rate: if n == 0 { 0.0 } else { successes as f64 / n as f64 },
        success_ci: wilson_interval(successes, n),
        no_decision: rows.iter().filter(|r| r.returned_arm.is_none()).count(),
        pulls_min: pulls.first().copied().unwrap_or(0),
        pulls_median: median(&pulls),
        pulls_p90: if n == 0 { 0 } else { rank_quantile(&pulls, 0.9) },
        pulls_max: pulls.last().copied().unwrap_or(0),
        mean_rounds: if n == 0 { 0.0 } else { rows.iter().map(|r| r.rounds as f64).sum::<f64>() / n as f64 },
        trials_with_bound_violation: rows.iter().filter(|r| r.bound_violations > 0).count(),
    }
}

impl StudyReport {
    /// Per-trial CSV: `seed, returned_arm, correct, total_pulls,
    /// sentinel_queries, rounds, pulls_arm_1..K`.
    pub fn rows_csv(&self) -> Result<String> {
        let k = self.rows.first().map_or(0, |r| r.pulls_per_arm.len());
        let mut header: Vec<String> = ["seed", "returned_arm", "correct", "total_pulls", "sentinel_queries", "rounds"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend((1..=k).map(|i| format!("pulls_arm_{i}")));
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let mut cells = vec![
                    r.seed.to_string(),
                    opt_cell(r.returned_arm.map(|a| a + 1)),
                    r.correct.to_string(),
                    r.total_pulls.to_string(),
                    r.sentinel_queries.to_string(),
                    r.rounds.to_string(),
                ];
                cells.extend(r.pulls_per_arm.iter().map(u64::to_string));
                cells
            })
            .collect();
        to_csv(&header, &rows)
    }

    /// Full report with 1-based arm indices.
    pub fn to_json(&self) -> Result<String> {
        let mut shown = self.clone();
        for r in &mut shown.rows {
            r.returned_arm = r.returned_arm.map(|a| a + 1);
        }
        to_sorted_json(&shown)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use qbai::RewardDistribution;

    fn det() -> Instance {
        let arms = [0.2, 0.8].iter().map(|&r| RewardDistribution::deterministic(r).unwrap()).collect();
        Instance::new(arms, 0.5, 1.0).unwrap()
    }

    #[test]
    fn deterministic_study_is_perfect_and_reproducible() {
        let inst = det();
        let cfg = AlgoConfig::new(1.0, 0.1, 0.5, 0.1, 1).unwrap();
        let a = run_study(&inst, &cfg, 8, 100, Some(1)).unwrap();
        let b = run_study(&inst, &cfg, 8, 100, Some(3)).unwrap();
        assert_eq!(a.aggregates.success_rate, 1.0);
        assert_eq!(a.rows.len(), 8);
        assert_eq!(a.rows[3].seed, 103);
        assert_eq!(a.rows_csv().unwrap(), b.rows_csv().unwrap());
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let csv = a.rows_csv().unwrap();
        assert!(csv.starts_with("seed,returned_arm,correct,total_pulls,sentinel_queries,rounds,pulls_arm_1,pulls_arm_2\n"));
        assert!(csv.lines().nth(1).unwrap().starts_with("100,2,true,"));
    }

    #[test]
    fn aggregates() {
        assert_eq!(median(&[3, 1, 2]), 2.0);
        assert_eq!(median(&[4, 1, 2, 3]), 2.5);
        let ci = wilson_interval(90, 100);
        assert!(ci[0] < 0.9 && 0.9 < ci[1]);
        assert_eq!(rank_quantile(&[1, 2, 3, 4, 5, 6, 7, 8, 9, 10], 0.9), 9);
    }
}
