//! The trainer registry and the episode loop every off-policy method shares.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use jrnra_core::config::LearningConfig;
use jrnra_core::env::{state_dim, ActionLayout, Environment, EvalOptions, JointEnv};
use jrnra_core::NetworkConfig;

use crate::checkpoint::write_mlp;
use crate::mlp::Mlp;
use crate::policy::ACTION_BOUND;
use crate::replay::{Batch, ReplayMemory, Transition};
use crate::AgentError;

/// Losses above this abort training.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

const ACTION_SALT: u64 = 0x5851_f42d_4c95_7f2d;
const UPDATE_SALT: u64 = 0x1405_7b7e_f767_814f;
const INIT_SALT: u64 = 0x2545_f491_4f6c_dd1d;
const EVAL_SALT: u64 = 0xda94_2042_e4dd_58b5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainSettings {
    pub episodes: usize,
    pub seed: u64,
    pub checkpoint_dir: Option<PathBuf>,
}

impl TrainSettings {
    pub fn new(episodes: usize, seed: u64) -> Self {
        Self {
            episodes,
            seed,
            checkpoint_dir: None,
        }
    }
}

/// One learning-curve line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub episode: usize,
    pub mean_reward: f64,
    pub critic_loss: Option<f64>,
    pub actor_loss: Option<f64>,
    pub admitted_users: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub method: String,
    pub curve: Vec<CurveRow>,
    /// Mean joint-objective energy efficiency of the final greedy policy.
    pub final_ee: f64,
    pub checkpoints: Vec<PathBuf>,
}

impl TrainReport {
    /// Mean of `mean_reward` over the last `n` episodes.
    pub fn tail_reward(&self, n: usize) -> f64 {
        let tail = &self.curve[self.curve.len().saturating_sub(n)..];
        if tail.is_empty() {
            return 0.0;
        }
        tail.iter().map(|r| r.mean_reward).sum::<f64>() / tail.len() as f64
    }
}

pub trait Trainer: Send + Sync {
    fn name(&self) -> &'static str;
    fn train(&self, cfg: &NetworkConfig, settings: &TrainSettings) -> Result<TrainReport, AgentError>;
}

/// Trainers looked up by name.
pub struct Registry {
    trainers: BTreeMap<&'static str, Box<dyn Trainer>>,
}

impl Registry {
    pub fn empty() -> Self {
        Self {
            trainers: BTreeMap::new(),
        }
    }

    pub fn with_defaults() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(crate::sac::SacTrainer));
        r.register(Box::new(crate::ddpg::DdpgTrainer));
        r.register(Box::new(crate::maddpg::MaddpgTrainer::default()));
        r.register(Box::new(crate::disjoint::DisjointTrainer));
        r.register(Box::new(crate::random::RandomTrainer));
        r
    }

    pub fn register(&mut self, trainer: Box<dyn Trainer>) {
        self.trainers.insert(trainer.name(), trainer);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Trainer, AgentError> {
        self.trainers
            .get(name)
            .map(|t| t.as_ref())
            .ok_or_else(|| AgentError::UnknownMethod(name.to_string()))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.trainers.keys().copied().collect()
    }
}

/// Reset seed of training episode `ep`.
pub fn episode_seed(seed: u64, ep: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ep as u64);
    rng.next_u64()
}

/// Reset seed of evaluation episode `ep`; independent of the method.
pub fn eval_seed(seed: u64, ep: usize) -> u64 {
    episode_seed(seed ^ EVAL_SALT, ep)
}

pub(crate) fn init_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ INIT_SALT)
}

/// `(state_dim, action_dim)` of the joint environment for `cfg`.
pub fn joint_dims(cfg: &NetworkConfig) -> (usize, usize) {
    (state_dim(cfg), ActionLayout::new(cfg).len())
}

pub fn uniform_action<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim)
        .map(|_| rng.random_range(-ACTION_BOUND..=ACTION_BOUND))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Losses {
    pub critic: f64,
    pub actor: f64,
}

/// What the shared loop needs from a learning method.
pub trait Agent {
    fn explore(&mut self, state: &[f64], step: u64, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, AgentError>;
    fn update(&mut self, batch: &Batch, rng: &mut ChaCha8Rng) -> Result<Losses, AgentError>;
    fn greedy(&self, state: &[f64]) -> Result<Vec<f64>, AgentError>;
    /// Named networks worth checkpointing.
    fn networks(&self) -> Vec<(&'static str, &Mlp)>;
}

/// Loop knobs taken from the learning config.
#[derive(Debug, Clone, Copy)]
pub struct LoopParams {
    pub episode_len: usize,
    pub batch_size: usize,
    pub replay_capacity: usize,
    pub warmup: usize,
    pub updates_per_step: usize,
}

impl From<&LearningConfig> for LoopParams {
    fn from(l: &LearningConfig) -> Self {
        Self {
            episode_len: l.episode_len,
            batch_size: l.batch_size,
            replay_capacity: l.replay_capacity,
            warmup: l.warmup,
            updates_per_step: l.updates_per_step,
        }
    }
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Runs `episodes` episodes starting at curve index `first_episode`.
/// Uniform actions are taken until `warmup` transitions are stored, and
/// always when no gradient steps are configured.
pub fn run_episodes(
    env: &mut dyn Environment,
    agent: &mut dyn Agent,
    params: LoopParams,
    episodes: usize,
    seed: u64,
    first_episode: usize,
) -> Result<Vec<CurveRow>, AgentError> {
    let mut action_rng = ChaCha8Rng::seed_from_u64(seed ^ ACTION_SALT);
    let mut update_rng = ChaCha8Rng::seed_from_u64(seed ^ UPDATE_SALT);
    let mut replay = ReplayMemory::new(params.replay_capacity);
    let mut steps = 0u64;
    let mut curve = Vec::with_capacity(episodes);
    for ep in 0..episodes {
        let mut state = env.reset(episode_seed(seed, first_episode + ep));
        let (mut rewards, mut admitted) = (0.0, 0.0);
        let (mut closs, mut aloss) = (Vec::new(), Vec::new());
        for _ in 0..params.episode_len {
            let random = params.updates_per_step == 0 || replay.len() < params.warmup;
            let action = if random {
                uniform_action(env.action_dim(), &mut action_rng)
            } else {
                agent.explore(&state, steps, &mut action_rng)?
            };
            let out = env.step(&action)?;
            rewards += out.reward;
            admitted += out.admitted as f64;
            replay.push(Transition {
                state,
                action,
                reward: out.reward,
                next_state: out.next_state.clone(),
            });
            state = out.next_state;
            steps += 1;
            if replay.len() >= params.warmup.max(params.batch_size) {
                for _ in 0..params.updates_per_step {
                    let batch = replay.sample(params.batch_size, &mut update_rng);
                    let l = agent.update(&batch, &mut update_rng)?;
                    for loss in [l.critic, l.actor.abs()] {
                        if !loss.is_finite() || loss > DIVERGENCE_LIMIT {
                            return Err(AgentError::Diverged {
                                loss,
                                episode: first_episode + ep,
                            });
                        }
                    }
                    closs.push(l.critic);
                    aloss.push(l.actor);
                }
            }
        }
        let len = params.episode_len.max(1) as f64;
        curve.push(CurveRow {
            episode: first_episode + ep,
            mean_reward: rewards / len,
            critic_loss: mean(&closs),
            actor_loss: mean(&aloss),
            admitted_users: admitted / len,
        });
    }
    Ok(curve)
}

/// Mean joint-objective energy efficiency of `policy` over the evaluation
/// episodes of `seed`.
pub fn evaluate_policy(
    cfg: &NetworkConfig,
    seed: u64,
    mut policy: impl FnMut(&[f64]) -> Result<Vec<f64>, AgentError>,
) -> Result<f64, AgentError> {
    let mut env = JointEnv::new(cfg.clone(), EvalOptions::joint());
    let l = &cfg.learning;
    let (mut total, mut n) = (0.0, 0usize);
    for ep in 0..l.eval_episodes {
        let mut state = env.reset(eval_seed(seed, ep));
        for _ in 0..l.episode_len {
            let out = env.step(&policy(&state)?)?;
            total += out.energy_efficiency;
            n += 1;
            state = out.next_state;
        }
    }
    Ok(if n == 0 { 0.0 } else { total / n as f64 })
}

/// Writes every network of `agent` as `<dir>/<method>_<name>.bin`.
pub fn save_checkpoints(
    dir: &std::path::Path,
    method: &str,
    agent: &dyn Agent,
) -> Result<Vec<PathBuf>, AgentError> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for (name, net) in agent.networks() {
        let path = dir.join(format!("{method}_{name}.bin"));
        write_mlp(net, BufWriter::new(File::create(&path)?))?;
        paths.push(path);
    }
    Ok(paths)
}

/// Train `agent` on a fresh joint environment, evaluate it and checkpoint it.
pub(crate) fn train_joint(
    method: &'static str,
    cfg: &NetworkConfig,
    settings: &TrainSettings,
    agent: &mut dyn Agent,
    params: LoopParams,
) -> Result<TrainReport, AgentError> {
    let mut env = JointEnv::new(cfg.clone(), EvalOptions::joint());
    let curve = run_episodes(&mut env, agent, params, settings.episodes, settings.seed, 0)?;
    let final_ee = evaluate_policy(cfg, settings.seed, |s| agent.greedy(s))?;
    let checkpoints = match &settings.checkpoint_dir {
        Some(dir) => save_checkpoints(dir, method, agent)?,
        None => Vec::new(),
    };
    Ok(TrainReport {
        method: method.to_string(),
        curve,
        final_ee,
        checkpoints,
    })
}
