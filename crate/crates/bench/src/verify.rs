//! Empirical check of the quantile search against its guarantee.

use qbai::channel::Channel;
use qbai::quantest::{quant_est, quant_est_naive, valid_indices, QuantEstOutcome};
use qbai::{Instance, MnbsParams, RewardDistribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::output::{to_csv, to_sorted_json};
use crate::{Result, VERSION};

/// One configuration of the verification matrix.
#[derive(Debug, Clone)]
pub struct MatrixRow {
    pub label: &'static str,
    pub dist: RewardDistribution,
    pub tau: f64,
    pub delta_relax: f64,
    pub delta_fail: f64,
    /// Spacing of the finite points `0, h, …, 1`.
    pub step: f64,
}

/// Step, continuous and mixed laws at `Δ ∈ {0.05, 0.1}` and `δ = 0.1`.
pub fn default_matrix() -> Vec<MatrixRow> {
    let row = |label, dist, tau, delta_relax| MatrixRow {
        label,
        dist,
        tau,
        delta_relax,
        delta_fail: 0.1,
        step: 0.05,
    };
    let mix = |w| RewardDistribution::dirac_uniform_mixture(w).unwrap();
    vec![
        row("mixture_w1/3", mix(1.0 / 3.0), 0.5, 0.1),
        row("mixture_w1/3", mix(1.0 / 3.0), 0.5, 0.05),
        row("mixture_w1/6", mix(1.0 / 6.0), 0.2, 0.1),
        row("deterministic_0.4", RewardDistribution::deterministic(0.4).unwrap(), 0.5, 0.1),
        row("deterministic_0.01", RewardDistribution::deterministic(0.01).unwrap(), 0.75, 0.05),
        row(
            "discrete_3pt",
            RewardDistribution::discrete(vec![(0.1, 0.3), (0.45, 0.4), (0.8, 0.3)]).unwrap(),
            0.3,
            0.05,
        ),
        row("uniform_0.2_0.7", RewardDistribution::uniform(0.2, 0.7).unwrap(), 0.25, 0.05),
        row(
            "piecewise_atom",
            RewardDistribution::piecewise(vec![(0.0, 0.0), (0.5, 0.3), (1.0, 0.6)], vec![(0.25, 0.4)]).unwrap(),
            0.75,
            0.1,
        ),
    ]
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodStats {
    pub successes: usize,
    pub success_rate: f64,
    pub mean_queries: f64,
    pub max_queries: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyRow {
    pub label: String,
    pub tau: f64,
    pub delta_relax: f64,
    pub delta_fail: f64,
    pub intervals: usize,
    /// Query budget of the multiplicative-weights search.
    pub t_max: u64,
    pub valid_indices: Vec<usize>,
    pub mnbs: MethodStats,
    pub naive: MethodStats,
    /// `1 - δ - 3 sqrt(δ(1-δ)/N)`.
    pub pass_threshold: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub version: &'static str,
    pub trials: usize,
    pub base_seed: u64,
    pub loop_constant: f64,
    pub rows: Vec<VerifyRow>,
}

pub fn grid_points(step: f64) -> Vec<f64> {
    let n = (1.0 / step).round() as usize;
    let mut x = vec![f64::NEG_INFINITY];
    x.extend((0..=n).map(|i| i as f64 / n as f64));
    x.push(f64::INFINITY);
    x
}

fn stats(outcomes: &[(QuantEstOutcome, bool)]) -> MethodStats {
    let successes = outcomes.iter().filter(|o| o.1).count();
    let n = outcomes.len().max(1) as f64;
    MethodStats {
        successes,
        success_rate: successes as f64 / n,
        mean_queries: outcomes.iter().map(|o| o.0.queries as f64).sum::<f64>() / n,
        max_queries: outcomes.iter().map(|o| o.0.queries).max().unwrap_or(0),
    }
}

/// Runs every row `trials` times with both searches; run `i` of every row
/// uses seed `base_seed + i`.
pub fn run_matrix(
    matrix: &[MatrixRow],
    trials: usize,
    base_seed: u64,
    loop_constant: f64,
    jobs: Option<usize>,
) -> Result<VerifyReport> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        pool = pool.num_threads(j);
    }
    let pool = pool.build()?;
    let mut rows = Vec::with_capacity(matrix.len());
    for m in matrix {
        let x = grid_points(m.step);
        let inst = Instance::new(vec![m.dist.clone()], 0.5, 1.0)?;
        let mut params = MnbsParams::new(m.tau, m.delta_relax, m.delta_fail);
        params.loop_constant = loop_constant;
        let valid = valid_indices(&m.dist, &x, m.tau, m.delta_relax);
        let run = |naive: bool| -> Result<Vec<(QuantEstOutcome, bool)>> {
            pool.install(|| {
                (0..trials)
                    .into_par_iter()
                    .map(|i| {
                        let mut ch = Channel::new(&inst, base_seed.wrapping_add(i as u64));
                        let out = if naive {
                            quant_est_naive(&mut ch, 0, &x, &params, 0)?
                        } else {
                            quant_est(&mut ch, 0, &x, &params, 0)?
                        };
                        Ok((out, valid.contains(&out.index)))
                    })
                    .collect()
            })
        };
        let mnbs = stats(&run(false)?);
        let naive = stats(&run(true)?);
        let d = m.delta_fail;
        log::info!("{} tau={} delta={}: mnbs {:.3}, naive {:.3}", m.label, m.tau, m.delta_relax, mnbs.success_rate, naive.success_rate);
        rows.push(VerifyRow {
            label: m.label.to_string(),
            tau: m.tau,
            delta_relax: m.delta_relax,
            delta_fail: d,
            intervals: x.len() - 1,
            t_max: params.max_steps(x.len() - 1),
            valid_indices: valid,
            mnbs,
            naive,
            pass_threshold: 1.0 - d - 3.0 * (d * (1.0 - d) / trials as f64).sqrt(),
        });
    }
    Ok(VerifyReport {
        version: VERSION,
        trials,
        base_seed,
        loop_constant,
        rows,
    })
}

impl VerifyReport {
    pub fn to_csv(&self) -> Result<String> {
        let header: Vec<String> = [
            "label",
            "tau",
            "delta_relax",
            "delta_fail",
            "intervals",
            "t_max",
            "mnbs_success_rate",
            "mnbs_max_queries",
            "mnbs_mean_queries",
            "naive_success_rate",
            "naive_max_queries",
            "naive_mean_queries",
            "pass_threshold",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.label.clone(),
                    r.tau.to_string(),
                    r.delta_relax.to_string(),
                    r.delta_fail.to_string(),
                    r.intervals.to_string(),
                    r.t_max.to_string(),
                    r.mnbs.success_rate.to_string(),
                    r.mnbs.max_queries.to_string(),
                    r.mnbs.mean_queries.to_string(),
                    r.naive.success_rate.to_string(),
                    r.naive.max_queries.to_string(),
                    r.naive.mean_queries.to_string(),
                    r.pass_threshold.to_string(),
                ]
            })
            .collect();
        to_csv(&header, &rows)
    }

    pub fn to_json(&self) -> Result<String> {
        to_sorted_json(self)
    }
}
