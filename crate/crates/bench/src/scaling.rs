//! Sweeps that measure how total pulls grow with the gap and with `λ/ε`.

use qbai::dist::{lower_bound_eps_limit, lower_bound_instance};
use qbai::engine::predicted_pull_bound;
use qbai::{AlgoConfig, Instance, RewardDistribution};
use serde::Serialize;

use crate::output::{opt_cell, to_csv, to_sorted_json};
use crate::study::{median, run_study, StudyReport};
use crate::{Result, VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    /// Lower-bound family over `γ`; every gap scales with `γ`.
    Gamma,
    /// Two deterministic arms over `λ/ε` with the reward gap fixed.
    Ratio,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingPoint {
    pub value: f64,
    pub eps: f64,
    pub median_pulls: f64,
    /// Median at this point over the median at the previous one.
    pub ratio_to_previous: Option<f64>,
    pub success_rate: f64,
    /// Pull bound with unit constant, for shape comparison only.
    pub predicted_bound: f64,
    /// Trials where the best arm was pulled no more than the least-pulled
    /// other arm.
    pub best_pulled_least: usize,
    pub report: StudyReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingStudy {
    pub version: &'static str,
    pub sweep: Sweep,
    pub points: Vec<ScalingPoint>,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub values: Vec<f64>,
    pub arms: usize,
    pub q: f64,
    pub delta: f64,
    pub c: u32,
    /// Fixed `ε` for the gamma sweep; default is half the separating bound.
    pub eps: Option<f64>,
    pub trials: usize,
    pub base_seed: u64,
    pub jobs: Option<usize>,
}

/// Rewards of the two-arm ratio sweep, on `λ = 1`.
pub const RATIO_REWARDS: (f64, f64) = (0.2, 0.8);

fn point_instance(sweep: Sweep, cfg: &SweepConfig, value: f64) -> Result<(Instance, AlgoConfig)> {
    Ok(match sweep {
        Sweep::Gamma => {
            let inst = lower_bound_instance(cfg.arms, value, None, cfg.q)?;
            let eps = cfg.eps.unwrap_or(0.5 * lower_bound_eps_limit(cfg.q, value));
            (inst, AlgoConfig::new(1.0, eps, cfg.q, cfg.delta, cfg.c)?)
        }
        Sweep::Ratio => {
            let arms = vec![
                RewardDistribution::deterministic(RATIO_REWARDS.0)?,
                RewardDistribution::deterministic(RATIO_REWARDS.1)?,
            ];
            let inst = Instance::new(arms, cfg.q, 1.0)?;
            (inst, AlgoConfig::new(1.0, 1.0 / value, cfg.q, cfg.delta, cfg.c)?)
        }
    })
}

pub fn run_sweep(sweep: Sweep, cfg: &SweepConfig) -> Result<ScalingStudy> {
    let mut points: Vec<ScalingPoint> = Vec::with_capacity(cfg.values.len());
    for &value in &cfg.values {
        let (inst, algo) = point_instance(sweep, cfg, value)?;
        log::info!("{sweep:?} = {value}: eps = {}", algo.eps);
        let report = run_study(&inst, &algo, cfg.trials, cfg.base_seed, cfg.jobs)?;
        let pulls: Vec<u64> = report.rows.iter().map(|r| r.total_pulls).collect();
        let median_pulls = median(&pulls);
        let best = qbai::gaps::unique_best(&inst)?;
        let best_pulled_least = report
            .rows
            .iter()
            .filter(|r| {
                let others = (0..r.pulls_per_arm.len()).filter(|&a| a != best).map(|a| r.pulls_per_arm[a]).min();
                others.is_none_or(|m| r.pulls_per_arm[best] <= m)
            })
            .count();
        points.push(ScalingPoint {
            value,
            eps: algo.eps,
            median_pulls,
            ratio_to_previous: points.last().map(|p| median_pulls / p.median_pulls),
            success_rate: report.aggregates.success_rate,
            predicted_bound: predicted_pull_bound(&inst, &algo)?,
            best_pulled_least,
            report,
        });
    }
    Ok(ScalingStudy {
        version: VERSION,
        sweep,
        points,
    })
}

impl ScalingStudy {
    pub fn summary_csv(&self) -> Result<String> {
        let header: Vec<String> = [
            "value",
            "eps",
            "trials",
            "median_pulls",
            "ratio_to_previous",
            "success_rate",
            "predicted_bound",
            "best_pulled_least",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let rows: Vec<Vec<String>> = self
            .points
            .iter()
            .map(|p| {
                vec![
                    p.value.to_string(),
                    p.eps.to_string(),
                    p.report.rows.len().to_string(),
                    p.median_pulls.to_string(),
                    opt_cell(p.ratio_to_previous),
                    p.success_rate.to_string(),
                    p.predicted_bound.to_string(),
                    p.best_pulled_least.to_string(),
                ]
            })
            .collect();
        to_csv(&header, &rows)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut shown = self.clone();
        for p in &mut shown.points {
            for r in &mut p.report.rows {
                r.returned_arm = r.returned_arm.map(|a| a + 1);
            }
        }
        to_sorted_json(&shown)
    }
}
