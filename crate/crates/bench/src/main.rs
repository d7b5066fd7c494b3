use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use qbai::dist::instance_to_json;
use qbai::gaps::{choose_c, gap_report, meets_theta, CParam};
use qbai::{AlgoConfig, GapConfig, Instance};
use qbai_bench::gap_table::{gap_csv, gap_json};
use qbai_bench::output::{write_atomic, write_pair};
use qbai_bench::scaling::{run_sweep, Sweep, SweepConfig};
use qbai_bench::source::resolve;
use qbai_bench::study::run_study;
use qbai_bench::verify::{default_matrix, run_matrix};

/// Quantile best-arm identification with one-bit threshold feedback.
#[derive(Parser)]
#[command(name = "qbai", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report every gap definition for each arm.
    Gaps {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        eps: f64,
        #[command(flatten)]
        c: CArgs,
        /// Writes OUT.csv and OUT.json; CSV goes to stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the learner for many seeded trials.
    Run {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[command(flatten)]
        c: CArgs,
        #[command(flatten)]
        trials: TrialArgs,
        #[arg(long, default_value_t = qbai::engine::DEFAULT_MAX_ROUNDS)]
        max_rounds: u32,
        #[arg(long, default_value_t = qbai::quantest::DEFAULT_LOOP_CONSTANT)]
        loop_constant: f64,
        /// Writes OUT.csv (one row per trial) and OUT.json (full report).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Median pulls across a sweep of gaps or of lambda/eps.
    Scaling {
        #[arg(long, value_enum, default_value = "gamma")]
        sweep: SweepArg,
        /// Comma-separated gamma values or lambda/eps ratios.
        #[arg(long, value_delimiter = ',', default_values_t = [0.16, 0.08, 0.04])]
        values: Vec<f64>,
        /// Arms of the lower-bound family.
        #[arg(long, default_value_t = 3)]
        arms: usize,
        #[arg(long, default_value_t = 0.5)]
        q: f64,
        /// Fixed eps for the gamma sweep; default is half the bound that
        /// keeps arm 1 the only satisfying arm.
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, default_value_t = 2)]
        c: u32,
        #[command(flatten)]
        trials: TrialArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Success rates of both quantile searches on a fixed matrix.
    QuantestVerify {
        #[command(flatten)]
        trials: TrialArgs,
        #[arg(long, default_value_t = qbai::quantest::DEFAULT_LOOP_CONSTANT)]
        loop_constant: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write an instance file from a generator.
    MakeInstance {
        #[command(flatten)]
        source: SourceArgs,
        /// JSON goes to stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SourceArgs {
    /// Instance JSON file (also the base for the perturb generator).
    #[arg(long)]
    instance: Option<PathBuf>,
    /// lower-bound, prop13, appendix-f1, deterministic or perturb.
    #[arg(long)]
    generator: Option<String>,
    /// Generator parameters as K=V,K=V.
    #[arg(long)]
    params: Option<String>,
    /// Overrides the instance's quantile level.
    #[arg(long)]
    q: Option<f64>,
    /// Overrides the instance's reward bound.
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Args)]
struct CArgs {
    /// Discretization parameter, a positive integer or "inf" (gap reports only).
    #[arg(long, conflicts_with = "theta")]
    c: Option<String>,
    /// Picks the smallest c with c*eps_tilde >= theta*eps.
    #[arg(long)]
    theta: Option<f64>,
}

#[derive(Args)]
struct TrialArgs {
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Trial i uses seed SEED + i.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum SweepArg {
    Gamma,
    Ratio,
}

impl SourceArgs {
    fn load(&self) -> Result<Instance> {
        Ok(resolve(
            self.instance.as_deref(),
            self.generator.as_deref(),
            self.params.as_deref(),
            self.q,
            self.lambda,
        )?)
    }
}

impl CArgs {
    fn resolve(&self, lambda: f64, eps: f64) -> Result<CParam> {
        if let Some(theta) = self.theta {
            let c = choose_c(theta)?;
            if !meets_theta(c, theta, lambda, eps) {
                log::warn!("c = {c} gives c*eps_tilde below {theta}*eps for lambda = {lambda}");
            }
            return Ok(CParam::Finite(c));
        }
        match self.c.as_deref() {
            None => Ok(CParam::Finite(1)),
            Some("inf") => Ok(CParam::Infinite),
            Some(s) => Ok(CParam::Finite(s.parse().with_context(|| format!("--c {s:?}"))?)),
        }
    }
}

fn emit(out: Option<&Path>, csv: &str, json: &str) -> Result<()> {
    match out {
        Some(p) => {
            write_pair(p, csv, json)?;
            log::info!("wrote {}", p.with_extension("csv").display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("QBAI_LOG", "warn")).init();
    match Cli::parse().command {
        Command::Gaps { source, eps, c, out } => {
            let inst = source.load()?;
            let cfg = GapConfig::new(inst.lambda(), eps, c.resolve(inst.lambda(), eps)?)?;
            let report = gap_report(&inst, &cfg)?;
            emit(out.as_deref(), &gap_csv(&report)?, &gap_json(&report)?)?;
        }
        Command::Run {
            source,
            eps,
            delta,
            c,
            trials,
            max_rounds,
            loop_constant,
            out,
        } => {
            let inst = source.load()?;
            let CParam::Finite(c) = c.resolve(inst.lambda(), eps)? else {
                bail!("the learner needs a finite --c");
            };
            let mut cfg = AlgoConfig::new(inst.lambda(), eps, inst.q(), delta, c)?;
            cfg.max_rounds = max_rounds;
            cfg.loop_constant = loop_constant;
            let report = run_study(&inst, &cfg, trials.trials, trials.seed, trials.jobs)?;
            let a = &report.aggregates;
            eprintln!(
                "success {}/{} ({:.3}, 95% CI {:.3}-{:.3}), median pulls {}",
                a.successes, a.trials, a.success_rate, a.success_ci[0], a.success_ci[1], a.pulls_median
            );
            emit(out.as_deref(), &report.rows_csv()?, &report.to_json()?)?;
        }
        Command::Scaling {
            sweep,
            values,
            arms,
            q,
            eps,
            delta,
            c,
            trials,
            out,
        } => {
            let sweep = match sweep {
                SweepArg::Gamma => Sweep::Gamma,
                SweepArg::Ratio => Sweep::Ratio,
            };
            let cfg = SweepConfig {
                values,
                arms,
                q,
                delta,
                c,
                eps,
                trials: trials.trials,
                base_seed: trials.seed,
                jobs: trials.jobs,
            };
            let study = run_sweep(sweep, &cfg)?;
            emit(out.as_deref(), &study.summary_csv()?, &study.to_json()?)?;
        }
        Command::QuantestVerify {
            trials,
            loop_constant,
            out,
        } => {
            let report = run_matrix(&default_matrix(), trials.trials, trials.seed, loop_constant, trials.jobs)?;
            emit(out.as_deref(), &report.to_csv()?, &report.to_json()?)?;
        }
        Command::MakeInstance { source, out } => {
            let text = instance_to_json(&source.load()?)?;
            match out {
                Some(p) => write_atomic(&p, text.as_bytes())?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}
