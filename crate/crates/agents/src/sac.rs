//! Soft actor-critic with twin critics and a fixed entropy temperature.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use jrnra_core::config::LearningConfig;
use jrnra_core::NetworkConfig;

use crate::adam::{Adam, LrSchedule};
use crate::critic::{critic_update, target_update, Critic, QFunction, TwinMin};
use crate::mlp::{Mlp, MlpError};
use crate::policy::SquashedGaussian;
use crate::replay::Batch;
use crate::trainer::{init_rng, train_joint, Agent, LoopParams, Losses, TrainReport, TrainSettings, Trainer};
use crate::AgentError;

/// Decay exponents of the critic and actor step sizes. The actor decays
/// faster, so the actor-to-critic ratio vanishes.
pub const CRITIC_LR_POWER: f64 = 0.6;
pub const ACTOR_LR_POWER: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SacHyper {
    pub temperature: f64,
    pub discount: f64,
    pub target_smoothing: f64,
    pub batch_size: usize,
    pub actor_lr: LrSchedule,
    pub critic_lr: LrSchedule,
}

impl SacHyper {
    pub fn from_learning(l: &LearningConfig) -> Self {
        Self {
            temperature: l.temperature,
            discount: l.discount,
            target_smoothing: l.target_smoothing,
            batch_size: l.batch_size,
            actor_lr: LrSchedule::inverse_time(l.actor_lr, l.lr_decay, ACTOR_LR_POWER),
            critic_lr: LrSchedule::inverse_time(l.critic_lr, l.lr_decay, CRITIC_LR_POWER),
        }
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |m: &str| Err(AgentError::Hyper(m.to_string()));
        if !(0.0..=1.0).contains(&self.discount) {
            return bad("discount must lie in [0, 1]");
        }
        if self.temperature < 0.0 {
            return bad("temperature must be non-negative");
        }
        if !(self.actor_lr.lr0 > 0.0 && self.critic_lr.lr0 > 0.0) {
            return bad("learning rates must be positive");
        }
        if !(0.0..=1.0).contains(&self.target_smoothing) {
            return bad("target smoothing must lie in [0, 1]");
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive");
        }
        Ok(())
    }
}

/// Monte-Carlo soft value `E[Q(s,a) - temperature * log pi(a|s)]`.
pub fn soft_value<R: Rng + ?Sized>(
    critic: &dyn QFunction,
    policy: &SquashedGaussian,
    state: &[f64],
    temperature: f64,
    samples: usize,
    rng: &mut R,
) -> Result<f64, MlpError> {
    let states = Array2::from_shape_fn((samples.max(1), state.len()), |(_, j)| state[j]);
    let b = policy.sample_batch(&states, rng)?;
    let q = critic.values(&states, &b.actions)?;
    Ok((&q - &(&b.log_probs * temperature)).mean().expect("non-empty"))
}

/// Exact soft value over a finite action set, `temperature * logsumexp(Q / temperature)`.
pub fn soft_value_discrete(q: &[f64], temperature: f64) -> f64 {
    let m = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if temperature == 0.0 {
        return m;
    }
    let s: f64 = q.iter().map(|x| ((x - m) / temperature).exp()).sum();
    m + temperature * s.ln()
}

/// Bellman targets `r + discount * (min Q'(s', a') - temperature * log pi(a'|s'))`.
pub fn soft_targets<R: Rng + ?Sized>(
    targets: &[Critic; 2],
    actor: &SquashedGaussian,
    batch: &Batch,
    hyper: &SacHyper,
    rng: &mut R,
) -> Result<Array1<f64>, MlpError> {
    let next = actor.sample_batch(&batch.next_states, rng)?;
    let q = TwinMin(&targets[0], &targets[1]).values(&batch.next_states, &next.actions)?;
    let soft = &q - &(&next.log_probs * hyper.temperature);
    Ok(&batch.rewards + &(soft * hyper.discount))
}

/// One Adam step on `mean(temperature * log pi(a|s) - Q(s,a))` with
/// reparameterised actions. Returns the loss before the step.
pub fn actor_update<R: Rng + ?Sized>(
    actor: &mut SquashedGaussian,
    opt: &mut Adam,
    q: &dyn QFunction,
    states: &Array2<f64>,
    temperature: f64,
    lr: f64,
    rng: &mut R,
) -> Result<f64, MlpError> {
    let b = actor.sample_batch(states, rng)?;
    let (qv, dq) = q.value_and_action_grad(states, &b.actions)?;
    let n = qv.len() as f64;
    let loss = (&b.log_probs * temperature - &qv).sum() / n;
    let dl_da = dq.mapv(|g| -g / n);
    let dl_dlogp = Array1::from_elem(qv.len(), temperature / n);
    let grad = actor.backward(&b, &dl_da, &dl_dlogp)?;
    opt.step(&mut actor.net, &grad, lr);
    Ok(loss)
}

#[derive(Debug, Clone)]
pub struct SacAgent {
    pub actor: SquashedGaussian,
    pub critics: [Critic; 2],
    pub targets: [Critic; 2],
    actor_opt: Adam,
    critic_opts: [Adam; 2],
    pub hyper: SacHyper,
    updates: u64,
}

impl SacAgent {
    pub fn new<R: Rng + ?Sized>(
        state_dim: usize,
        action_dim: usize,
        hidden: &[usize],
        hyper: SacHyper,
        rng: &mut R,
    ) -> Result<Self, AgentError> {
        hyper.validate()?;
        let actor = SquashedGaussian::random(state_dim, hidden, action_dim, rng);
        let critics = [
            Critic::random(state_dim, action_dim, hidden, rng),
            Critic::random(state_dim, action_dim, hidden, rng),
        ];
        Ok(Self {
            actor_opt: Adam::new(&actor.net),
            critic_opts: [Adam::new(&critics[0].net), Adam::new(&critics[1].net)],
            targets: critics.clone(),
            actor,
            critics,
            hyper,
            updates: 0,
        })
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }
}

impl Agent for SacAgent {
    fn explore(&mut self, state: &[f64], _step: u64, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, AgentError> {
        Ok(self.actor.sample(state, rng)?.0)
    }

    fn update(&mut self, batch: &Batch, rng: &mut ChaCha8Rng) -> Result<Losses, AgentError> {
        let h = &self.hyper;
        let (clr, alr) = (h.critic_lr.at(self.updates), h.actor_lr.at(self.updates));
        let y = soft_targets(&self.targets, &self.actor, batch, h, rng)?;
        let mut critic = 0.0;
        for (c, opt) in self.critics.iter_mut().zip(&mut self.critic_opts) {
            critic += critic_update(c, opt, &batch.states, &batch.actions, &y, clr)?;
        }
        let twin = TwinMin(&self.critics[0], &self.critics[1]);
        let actor = actor_update(
            &mut self.actor,
            &mut self.actor_opt,
            &twin,
            &batch.states,
            h.temperature,
            alr,
            rng,
        )?;
        for (c, t) in self.critics.iter().zip(&mut self.targets) {
            target_update(&c.net, &mut t.net, h.target_smoothing);
        }
        self.updates += 1;
        Ok(Losses {
            critic: critic / 2.0,
            actor,
        })
    }

    fn greedy(&self, state: &[f64]) -> Result<Vec<f64>, AgentError> {
        Ok(self.actor.mean_action(state)?)
    }

    fn networks(&self) -> Vec<(&'static str, &Mlp)> {
        vec![
            ("actor", &self.actor.net),
            ("critic1", &self.critics[0].net),
            ("critic2", &self.critics[1].net),
        ]
    }
}

pub struct SacTrainer;

impl Trainer for SacTrainer {
    fn name(&self) -> &'static str {
        "sac"
    }

    fn train(&self, cfg: &NetworkConfig, settings: &TrainSettings) -> Result<TrainReport, AgentError> {
        let l = &cfg.learning;
        let (sd, ad) = crate::trainer::joint_dims(cfg);
        let mut agent = SacAgent::new(sd, ad, &l.hidden_sizes, SacHyper::from_learning(l), &mut init_rng(settings.seed))?;
        train_joint(self.name(), cfg, settings, &mut agent, LoopParams::from(l))
    }
}
