//! Instance sources: a JSON file or a named generator with `K=V` parameters.

use std::collections::BTreeMap;
use std::path::Path;

use qbai::dist::{
    appendix_f1_instance, load_instance, lower_bound_instance, perturb, prop13_instance,
};
use qbai::{Instance, RewardDistribution};

use crate::{BenchError, Result};

pub const GENERATORS: &[&str] = &["lower-bound", "prop13", "appendix-f1", "deterministic", "perturb"];

/// Parsed `K=V,K=V` list. Every key must be consumed by the generator.
#[derive(Debug, Clone, Default)]
pub struct Params {
    values: BTreeMap<String, String>,
}

impl Params {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for pair in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| BenchError::Param(format!("expected KEY=VALUE, got {pair:?}")))?;
            if values.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(BenchError::Param(format!("duplicate key {k:?}")));
            }
        }
        Ok(Self { values })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.values.remove(key)
    }

    fn f64_or(&mut self, key: &str, default: Option<f64>) -> Result<f64> {
        match self.take(key) {
            Some(v) => parse_f64(key, &v),
            None => default.ok_or_else(|| BenchError::Param(format!("missing parameter {key}"))),
        }
    }

    fn usize_opt(&mut self, key: &str) -> Result<Option<usize>> {
        self.take(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| BenchError::Param(format!("{key} = {v:?} is not a non-negative integer")))
            })
            .transpose()
    }

    fn finish(self, generator: &str) -> Result<()> {
        match self.values.keys().next() {
            Some(k) => Err(BenchError::Param(format!("unknown parameter {k:?} for generator {generator}"))),
            None => Ok(()),
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    // Accept simple fractions such as 1/6.
    let parsed = match v.split_once('/') {
        Some((a, b)) => a.trim().parse::<f64>().and_then(|a| b.trim().parse::<f64>().map(|b| a / b)),
        None => v.parse::<f64>(),
    };
    parsed.map_err(|_| BenchError::Param(format!("{key} = {v:?} is not a number")))
}

/// 1-based arm parameter converted to a 0-based index.
fn arm_index(params: &mut Params, key: &str) -> Result<Option<usize>> {
    match params.usize_opt(key)? {
        Some(0) => Err(BenchError::Param(format!("{key} is 1-based; 0 is not an arm"))),
        Some(k) => Ok(Some(k - 1)),
        None => Ok(None),
    }
}

/// Builds an instance from a generator.
///
/// - `lower-bound`: `k` (5), `gamma` (1/6), `q` (0.5), optional 1-based `j`.
/// - `prop13`: `m1`, `m2`, `eps`.
/// - `appendix-f1`: `lambda`, `eps`.
/// - `deterministic`: `rewards` as `r1:r2:…`, `q` (0.5), `lambda` (1).
/// - `perturb`: needs `base`; 1-based `k` and `a`, `eta`.
pub fn generate(name: &str, mut params: Params, base: Option<&Instance>) -> Result<Instance> {
    let inst = match name {
        "lower-bound" => {
            let k = params.usize_opt("k")?.unwrap_or(5);
            let gamma = params.f64_or("gamma", Some(1.0 / 6.0))?;
            let q = params.f64_or("q", Some(0.5))?;
            let j = arm_index(&mut params, "j")?;
            lower_bound_instance(k, gamma, j, q)?
        }
        "prop13" => {
            let m1 = params.f64_or("m1", None)?;
            let m2 = params.f64_or("m2", None)?;
            let eps = params.f64_or("eps", None)?;
            prop13_instance(m1, m2, eps)?
        }
        "appendix-f1" => {
            let lambda = params.f64_or("lambda", None)?;
            let eps = params.f64_or("eps", None)?;
            appendix_f1_instance(lambda, eps)?
        }
        "deterministic" => {
            let rewards = params
                .take("rewards")
                .ok_or_else(|| BenchError::Param("missing parameter rewards".into()))?;
            let q = params.f64_or("q", Some(0.5))?;
            let lambda = params.f64_or("lambda", Some(1.0))?;
            let arms = rewards
                .split(':')
                .map(|r| Ok(RewardDistribution::deterministic(parse_f64("rewards", r.trim())?)?))
                .collect::<Result<Vec<_>>>()?;
            Instance::new(arms, q, lambda)?
        }
        "perturb" => {
            let base = base.ok_or_else(|| BenchError::Param("perturb needs --instance as its base".into()))?;
            let k = arm_index(&mut params, "k")?.ok_or_else(|| BenchError::Param("missing parameter k".into()))?;
            let a = arm_index(&mut params, "a")?.ok_or_else(|| BenchError::Param("missing parameter a".into()))?;
            let eta = params.f64_or("eta", None)?;
            perturb(base, k, a, eta)?
        }
        other => {
            return Err(BenchError::Param(format!(
                "unknown generator {other:?}; expected one of {}",
                GENERATORS.join(", ")
            )))
        }
    };
    params.finish(name)?;
    Ok(inst)
}

/// Resolves `--instance` / `--generator` and applies `--q` / `--lambda`
/// overrides.
pub fn resolve(
    instance: Option<&Path>,
    generator: Option<&str>,
    params: Option<&str>,
    q: Option<f64>,
    lambda: Option<f64>,
) -> Result<Instance> {
    let file = instance.map(load_instance::<f64>).transpose()?;
    let inst = match generator {
        Some(g) => generate(g, Params::parse(params.unwrap_or(""))?, file.as_ref())?,
        None => {
            if params.is_some() {
                return Err(BenchError::Param("--params needs --generator".into()));
            }
            file.ok_or_else(|| BenchError::Param("need --instance or --generator".into()))?
        }
    };
    if q.is_none() && lambda.is_none() {
        return Ok(inst);
    }
    Ok(inst.with_params(q.unwrap_or(inst.q()), lambda.unwrap_or(inst.lambda()))?)
}
