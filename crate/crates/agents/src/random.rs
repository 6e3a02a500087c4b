//! Uniform random actions; the reference curve for learning checks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use jrnra_core::env::{EvalOptions, JointEnv};
use jrnra_core::NetworkConfig;

use crate::mlp::Mlp;
use crate::replay::Batch;
use crate::trainer::{
    evaluate_policy, joint_dims, run_episodes, uniform_action, Agent, LoopParams, Losses, TrainReport, TrainSettings,
    Trainer,
};
use crate::AgentError;

const POLICY_SALT: u64 = 0x9fb2_1c65_1e98_df25;

/// Never consulted by the loop, which draws its own uniform actions when no
/// gradient steps are configured.
struct Uniform;

impl Agent for Uniform {
    fn explore(&mut self, state: &[f64], _step: u64, _rng: &mut ChaCha8Rng) -> Result<Vec<f64>, AgentError> {
        Ok(vec![0.0; state.len()])
    }

    fn update(&mut self, _batch: &Batch, _rng: &mut ChaCha8Rng) -> Result<Losses, AgentError> {
        Ok(Losses::default())
    }

    fn greedy(&self, state: &[f64]) -> Result<Vec<f64>, AgentError> {
        Ok(vec![0.0; state.len()])
    }

    fn networks(&self) -> Vec<(&'static str, &Mlp)> {
        Vec::new()
    }
}

pub struct RandomTrainer;

impl Trainer for RandomTrainer {
    fn name(&self) -> &'static str {
        "random"
    }

    fn train(&self, cfg: &NetworkConfig, settings: &TrainSettings) -> Result<TrainReport, AgentError> {
        let params = LoopParams {
            updates_per_step: 0,
            ..LoopParams::from(&cfg.learning)
        };
        let mut env = JointEnv::new(cfg.clone(), EvalOptions::joint());
        let curve = run_episodes(&mut env, &mut Uniform, params, settings.episodes, settings.seed, 0)?;
        let (_, ad) = joint_dims(cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(settings.seed ^ POLICY_SALT);
        let final_ee = evaluate_policy(cfg, settings.seed, |_| Ok(uniform_action(ad, &mut rng)))?;
        Ok(TrainReport {
            method: self.name().to_string(),
            curve,
            final_ee,
            checkpoints: Vec::new(),
        })
    }
}
