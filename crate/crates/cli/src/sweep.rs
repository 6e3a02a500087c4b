//! Parameter sweeps over (value, method, seed) cells.

use std::fmt;
use std::str::FromStr;

use anyhow::{bail, ensure};
use rayon::prelude::*;
use serde::Serialize;

use jrnra_agents::{Registry, TrainSettings};
use jrnra_core::NetworkConfig;

use crate::stats::median;

/// Episodes averaged for a run's reported reward.
pub const TAIL_EPISODES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    NumUsers,
    RateMin,
    LatencyMax,
    Mu2,
}

impl SweepVariable {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::NumUsers => "num_users",
            Self::RateMin => "rate_min",
            Self::LatencyMax => "latency_max",
            Self::Mu2 => "mu2",
        }
    }

    /// Values used when a sweep names none.
    pub fn default_values(self, cfg: &NetworkConfig) -> Vec<f64> {
        match self {
            Self::NumUsers => {
                let n = cfg.num_users.max(1) as f64;
                vec![(n / 2.0).ceil(), n, 2.0 * n]
            }
            Self::RateMin => vec![0.5, 1.0, 2.0],
            Self::LatencyMax => vec![0.05, 0.1, 0.5],
            Self::Mu2 => vec![0.1, 0.5, 1.0, 2.0, 5.0],
        }
    }

    /// `cfg` with this variable set to `value`; service-level variables
    /// apply to every service.
    pub fn apply(self, cfg: &NetworkConfig, value: f64) -> anyhow::Result<NetworkConfig> {
        ensure!(value.is_finite(), "{self} value must be finite");
        let mut cfg = cfg.clone();
        match self {
            Self::NumUsers => {
                ensure!(value >= 1.0 && value.fract() == 0.0, "num_users must be a positive integer, got {value}");
                cfg = cfg.with_users(value as usize);
            }
            Self::RateMin => {
                ensure!(value >= 0.0, "rate_min must be non-negative");
                cfg.services.iter_mut().for_each(|s| s.rate_min = value);
            }
            Self::LatencyMax => {
                ensure!(value > 0.0, "latency_max must be positive");
                cfg.services.iter_mut().for_each(|s| s.latency_max = value);
            }
            Self::Mu2 => {
                ensure!(value >= 0.0, "mu2 must be non-negative");
                cfg.mu2 = value;
            }
        }
        Ok(cfg)
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepVariable {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "num_users" | "users" => Self::NumUsers,
            "rate_min" => Self::RateMin,
            "latency_max" => Self::LatencyMax,
            "mu2" => Self::Mu2,
            other => bail!("unknown sweep variable `{other}` (num_users, rate_min, latency_max, mu2)"),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub methods: Vec<String>,
    pub seeds: Vec<u64>,
    pub episodes: usize,
}

impl SweepSpec {
    pub fn validate(&self, registry: &Registry) -> anyhow::Result<()> {
        ensure!(!self.values.is_empty(), "sweep needs at least one value");
        ensure!(!self.methods.is_empty(), "sweep needs at least one method");
        ensure!(!self.seeds.is_empty(), "sweep needs at least one seed");
        for m in &self.methods {
            registry.get(m)?;
        }
        Ok(())
    }
}

/// One CSV line per (value, method, seed). Failed cells keep their error and
/// leave the numbers empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub variable: SweepVariable,
    pub value: f64,
    pub method: String,
    pub seed: u64,
    pub final_ee: Option<f64>,
    pub mean_reward: Option<f64>,
    pub error: Option<String>,
}

/// Runs every cell on a pool of `jobs` threads; rows come back in
/// value, method, seed order regardless of completion order.
pub fn run_sweep(cfg: &NetworkConfig, spec: &SweepSpec, registry: &Registry, jobs: usize) -> anyhow::Result<Vec<SweepRow>> {
    spec.validate(registry)?;
    let mut cells = Vec::new();
    for &value in &spec.values {
        for method in &spec.methods {
            for &seed in &spec.seeds {
                cells.push((value, method.clone(), seed));
            }
        }
    }
    let run_cell = |(value, method, seed): &(f64, String, u64)| {
        let outcome = spec
            .variable
            .apply(cfg, *value)
            .and_then(|c| Ok(registry.get(method)?.train(&c, &TrainSettings::new(spec.episodes, *seed))?));
        let (final_ee, mean_reward, error) = match outcome {
            Ok(r) => (Some(r.final_ee), Some(r.tail_reward(TAIL_EPISODES)), None),
            Err(e) => (None, None, Some(format!("{e:#}"))),
        };
        SweepRow {
            variable: spec.variable,
            value: *value,
            method: method.clone(),
            seed: *seed,
            final_ee,
            mean_reward,
            error,
        }
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build()?;
    Ok(pool.install(|| cells.par_iter().map(run_cell).collect()))
}

/// Median final EE across seeds for `method` at each value, in `values` order.
/// Values with no successful seed are skipped.
pub fn median_ee(rows: &[SweepRow], method: &str, values: &[f64]) -> Vec<(f64, f64)> {
    values
        .iter()
        .filter_map(|&v| {
            let ees: Vec<f64> = rows
                .iter()
                .filter(|r| r.method == method && r.value == v)
                .filter_map(|r| r.final_ee)
                .collect();
            median(&ees).map(|m| (v, m))
        })
        .collect()
}

pub fn write_rows<W: std::io::Write>(rows: &[SweepRow], w: W) -> anyhow::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}
