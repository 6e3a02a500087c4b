//! Deterministic policy gradient with decaying Gaussian exploration noise.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use jrnra_core::config::LearningConfig;
use jrnra_core::NetworkConfig;

use crate::adam::Adam;
use crate::critic::{critic_update, target_update, Critic, QFunction};
use crate::mlp::{ForwardCache, Mlp, MlpError};
use crate::policy::ACTION_BOUND;
use crate::replay::Batch;
use crate::sac::SacHyper;
use crate::trainer::{init_rng, joint_dims, train_joint, Agent, LoopParams, Losses, TrainReport, TrainSettings, Trainer};
use crate::AgentError;

/// `tanh(net(s))`, clamped inside the action bound.
#[derive(Debug, Clone, PartialEq)]
pub struct DetActor {
    pub net: Mlp,
}

impl DetActor {
    pub fn random<R: Rng + ?Sized>(state_dim: usize, hidden: &[usize], action_dim: usize, rng: &mut R) -> Self {
        let mut sizes = vec![state_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(action_dim);
        Self {
            net: Mlp::random(&sizes, 0.1, rng).expect("positive layer sizes"),
        }
    }

    pub fn act(&self, state: &[f64]) -> Result<Vec<f64>, MlpError> {
        Ok(self
            .net
            .forward(state)?
            .into_iter()
            .map(|z| z.tanh().clamp(-ACTION_BOUND, ACTION_BOUND))
            .collect())
    }

    /// Batched actions with the cache needed by [`Self::backward`].
    pub fn act_batch(&self, states: &Array2<f64>) -> Result<(ForwardCache, Array2<f64>), MlpError> {
        let cache = self.net.forward_batch(states)?;
        let a = cache.output().mapv(|z| z.tanh().clamp(-ACTION_BOUND, ACTION_BOUND));
        Ok((cache, a))
    }

    /// Parameter gradient of `sum(dl_da .* a)`.
    pub fn backward(&self, cache: &ForwardCache, actions: &Array2<f64>, dl_da: &Array2<f64>) -> Result<Mlp, MlpError> {
        let up = dl_da * &actions.mapv(|t| 1.0 - t * t);
        Ok(self.net.backward_batch(cache, &up)?.0)
    }
}

/// Exploration scale after `step` environment steps.
pub fn exploration_scale(eps_start: f64, eps_decay: f64, step: u64) -> f64 {
    eps_start * eps_decay.powf(step as f64)
}

/// One ascent step on `mean Q(s, pi(s))`. Returns `-mean Q` before the step.
pub fn deterministic_actor_update(
    actor: &mut DetActor,
    opt: &mut Adam,
    q: &dyn QFunction,
    states: &Array2<f64>,
    lr: f64,
) -> Result<f64, MlpError> {
    let (cache, a) = actor.act_batch(states)?;
    let (qv, dq) = q.value_and_action_grad(states, &a)?;
    let n = qv.len() as f64;
    let grad = actor.backward(&cache, &a, &dq.mapv(|g| -g / n))?;
    opt.step(&mut actor.net, &grad, lr);
    Ok(-qv.sum() / n)
}

/// `r + discount * Q'(s', a')` for next actions `a'`.
pub fn deterministic_targets(
    target_critic: &Critic,
    next_actions: &Array2<f64>,
    batch: &Batch,
    discount: f64,
) -> Result<Array1<f64>, MlpError> {
    let q = target_critic.values(&batch.next_states, next_actions)?;
    Ok(&batch.rewards + &(q * discount))
}

pub(crate) fn add_noise(action: Vec<f64>, scale: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    action
        .into_iter()
        .map(|a| (a + scale * rng.sample::<f64, _>(StandardNormal)).clamp(-ACTION_BOUND, ACTION_BOUND))
        .collect()
}

#[derive(Debug, Clone)]
pub struct DdpgAgent {
    pub actor: DetActor,
    pub critic: Critic,
    pub target_actor: DetActor,
    pub target_critic: Critic,
    actor_opt: Adam,
    critic_opt: Adam,
    pub hyper: SacHyper,
    pub eps_start: f64,
    pub eps_decay: f64,
    updates: u64,
}

impl DdpgAgent {
    pub fn new<R: Rng + ?Sized>(
        state_dim: usize,
        action_dim: usize,
        l: &LearningConfig,
        rng: &mut R,
    ) -> Result<Self, AgentError> {
        let hyper = SacHyper::from_learning(l);
        hyper.validate()?;
        let actor = DetActor::random(state_dim, &l.hidden_sizes, action_dim, rng);
        let critic = Critic::random(state_dim, action_dim, &l.hidden_sizes, rng);
        Ok(Self {
            actor_opt: Adam::new(&actor.net),
            critic_opt: Adam::new(&critic.net),
            target_actor: actor.clone(),
            target_critic: critic.clone(),
            actor,
            critic,
            hyper,
            eps_start: l.eps_start,
            eps_decay: l.eps_decay,
            updates: 0,
        })
    }
}

impl Agent for DdpgAgent {
    fn explore(&mut self, state: &[f64], step: u64, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, AgentError> {
        let scale = exploration_scale(self.eps_start, self.eps_decay, step);
        Ok(add_noise(self.actor.act(state)?, scale, rng))
    }

    fn update(&mut self, batch: &Batch, _rng: &mut ChaCha8Rng) -> Result<Losses, AgentError> {
        let h = &self.hyper;
        let (clr, alr) = (h.critic_lr.at(self.updates), h.actor_lr.at(self.updates));
        let (_, next) = self.target_actor.act_batch(&batch.next_states)?;
        let y = deterministic_targets(&self.target_critic, &next, batch, h.discount)?;
        let critic = critic_update(&mut self.critic, &mut self.critic_opt, &batch.states, &batch.actions, &y, clr)?;
        let actor = deterministic_actor_update(&mut self.actor, &mut self.actor_opt, &self.critic, &batch.states, alr)?;
        target_update(&self.critic.net, &mut self.target_critic.net, h.target_smoothing);
        target_update(&self.actor.net, &mut self.target_actor.net, h.target_smoothing);
        self.updates += 1;
        Ok(Losses { critic, actor })
    }

    fn greedy(&self, state: &[f64]) -> Result<Vec<f64>, AgentError> {
        Ok(self.actor.act(state)?)
    }

    fn networks(&self) -> Vec<(&'static str, &Mlp)> {
        vec![("actor", &self.actor.net), ("critic", &self.critic.net)]
    }
}

pub struct DdpgTrainer;

impl Trainer for DdpgTrainer {
    fn name(&self) -> &'static str {
        "ddpg"
    }

    fn train(&self, cfg: &NetworkConfig, settings: &TrainSettings) -> Result<TrainReport, AgentError> {
        let (sd, ad) = joint_dims(cfg);
        let mut agent = DdpgAgent::new(sd, ad, &cfg.learning, &mut init_rng(settings.seed))?;
        train_joint(self.name(), cfg, settings, &mut agent, LoopParams::from(&cfg.learning))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    struct Flat;

    impl QFunction for Flat {
        fn value_and_action_grad(
            &self,
            states: &Array2<f64>,
            actions: &Array2<f64>,
        ) -> Result<(Array1<f64>, Array2<f64>), MlpError> {
            Ok((Array1::zeros(states.nrows()), Array2::zeros(actions.raw_dim())))
        }
    }

    #[test]
    fn exploration_decays_monotonically() {
        let mut prev = f64::INFINITY;
        for t in 0..5000 {
            let e = exploration_scale(1.0, 0.9994, t);
            assert!(e < prev);
            prev = e;
        }
        assert_eq!(exploration_scale(1.0, 0.9994, 0), 1.0);
        assert!((exploration_scale(1.0, 0.9994, 2) - 0.9994f64.powi(2)).abs() < 1e-15);
    }

    #[test]
    fn flat_critic_keeps_policy() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut actor = DetActor::random(3, &[8], 2, &mut rng);
        let before = actor.clone();
        let mut opt = Adam::new(&actor.net);
        let states = Array2::from_elem((4, 3), 0.3);
        for _ in 0..10 {
            deterministic_actor_update(&mut actor, &mut opt, &Flat, &states, 0.1).unwrap();
        }
        assert_eq!(actor, before);
        let a = actor.act(&[0.3, 0.3, 0.3]).unwrap();
        assert_eq!(add_noise(a.clone(), 0.0, &mut rng), a);
    }
}
