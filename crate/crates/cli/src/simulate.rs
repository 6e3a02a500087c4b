//! Environment roll-outs under uniform random actions.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use jrnra_agents::trainer::{episode_seed, uniform_action};
use jrnra_core::env::{Environment, EvalOptions, JointEnv, TraceWriter};
use jrnra_core::NetworkConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRow {
    pub episode: usize,
    pub step: usize,
    pub reward: f64,
    pub energy_efficiency: f64,
    pub sum_rate: f64,
    pub radio_energy: f64,
    pub cpu_energy: f64,
    pub admitted: usize,
    pub dropped: usize,
}

pub fn simulate(
    cfg: &NetworkConfig,
    seed: u64,
    episodes: usize,
    trace: Option<TraceWriter>,
) -> anyhow::Result<Vec<StepRow>> {
    let mut env = JointEnv::new(cfg.clone(), EvalOptions::joint());
    env.set_trace(trace);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for ep in 0..episodes {
        env.reset(episode_seed(seed, ep));
        for step in 0..cfg.learning.episode_len {
            let action = uniform_action(env.action_dim(), &mut rng);
            let e = env.step_detailed(&action)?.evaluation;
            rows.push(StepRow {
                episode: ep,
                step,
                reward: e.reward,
                energy_efficiency: e.energy_efficiency,
                sum_rate: e.sum_rate,
                radio_energy: e.energy.radio,
                cpu_energy: e.energy.cpu,
                admitted: e.admitted.len(),
                dropped: e.dropped.len(),
            });
        }
    }
    if let Some(mut t) = env.take_trace() {
        t.flush()?;
    }
    Ok(rows)
}

pub fn write_steps<W: Write>(rows: &[StepRow], w: W) -> anyhow::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use jrnra_core::scenarios::tiny_learning;

    #[test]
    fn one_row_per_step_and_seeded() {
        let cfg = tiny_learning();
        let a = simulate(&cfg, 4, 2, None).unwrap();
        assert_eq!(a.len(), 2 * cfg.learning.episode_len);
        assert_eq!(a, simulate(&cfg, 4, 2, None).unwrap());
        assert!(a.iter().all(|r| r.admitted + r.dropped <= cfg.num_users));
    }
}
