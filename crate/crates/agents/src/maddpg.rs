//! Two deterministic actors, one for the radio slice and one for the core
//! slice, trained against a single global critic on the joint action.

use std::ops::Range;

use ndarray::{concatenate, s, Array2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use jrnra_core::config::LearningConfig;
use jrnra_core::env::ActionLayout;
use jrnra_core::NetworkConfig;

use crate::adam::Adam;
use crate::critic::{critic_update, target_update, Critic, QFunction};
use crate::ddpg::{add_noise, deterministic_targets, exploration_scale, DetActor};
use crate::mlp::Mlp;
use crate::replay::Batch;
use crate::sac::SacHyper;
use crate::trainer::{init_rng, joint_dims, train_joint, Agent, LoopParams, Losses, TrainReport, TrainSettings, Trainer};
use crate::AgentError;

#[derive(Debug, Clone)]
pub struct MaddpgAgent {
    pub radio: DetActor,
    pub core: DetActor,
    pub critic: Critic,
    target_radio: DetActor,
    target_core: DetActor,
    target_critic: Critic,
    radio_opt: Adam,
    core_opt: Adam,
    critic_opt: Adam,
    pub hyper: SacHyper,
    eps_start: f64,
    eps_decay: f64,
    /// Keep the core actor at its initial parameters.
    pub freeze_core: bool,
    updates: u64,
}

impl MaddpgAgent {
    /// `slices` must be the radio block followed by the core block, together
    /// covering the whole action.
    pub fn new<R: Rng + ?Sized>(
        state_dim: usize,
        slices: [Range<usize>; 2],
        l: &LearningConfig,
        freeze_core: bool,
        rng: &mut R,
    ) -> Result<Self, AgentError> {
        let [radio, core] = slices;
        if radio.start != 0 || radio.end != core.start || core.is_empty() || radio.is_empty() {
            return Err(AgentError::Hyper(format!(
                "action slices {radio:?} and {core:?} are not adjacent blocks"
            )));
        }
        let hyper = SacHyper::from_learning(l);
        hyper.validate()?;
        let h = &l.hidden_sizes;
        let radio_actor = DetActor::random(state_dim, h, radio.len(), rng);
        let core_actor = DetActor::random(state_dim, h, core.len(), rng);
        let critic = Critic::random(state_dim, core.end, h, rng);
        Ok(Self {
            radio_opt: Adam::new(&radio_actor.net),
            core_opt: Adam::new(&core_actor.net),
            critic_opt: Adam::new(&critic.net),
            target_radio: radio_actor.clone(),
            target_core: core_actor.clone(),
            target_critic: critic.clone(),
            radio: radio_actor,
            core: core_actor,
            critic,
            hyper,
            eps_start: l.eps_start,
            eps_decay: l.eps_decay,
            freeze_core,
            updates: 0,
        })
    }

    fn joint(&self, state: &[f64]) -> Result<Vec<f64>, AgentError> {
        let mut a = self.radio.act(state)?;
        a.extend(self.core.act(state)?);
        Ok(a)
    }
}

impl Agent for MaddpgAgent {
    fn explore(&mut self, state: &[f64], step: u64, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, AgentError> {
        let scale = exploration_scale(self.eps_start, self.eps_decay, step);
        let mut a = add_noise(self.radio.act(state)?, scale, rng);
        a.extend(add_noise(self.core.act(state)?, scale, rng));
        Ok(a)
    }

    fn update(&mut self, batch: &Batch, _rng: &mut ChaCha8Rng) -> Result<Losses, AgentError> {
        let h = &self.hyper;
        let (clr, alr) = (h.critic_lr.at(self.updates), h.actor_lr.at(self.updates));
        let (_, nr) = self.target_radio.act_batch(&batch.next_states)?;
        let (_, nc) = self.target_core.act_batch(&batch.next_states)?;
        let next = concatenate(Axis(1), &[nr.view(), nc.view()]).expect("same rows");
        let y = deterministic_targets(&self.target_critic, &next, batch, h.discount)?;
        let critic = critic_update(&mut self.critic, &mut self.critic_opt, &batch.states, &batch.actions, &y, clr)?;

        let (rc, ra) = self.radio.act_batch(&batch.states)?;
        let (cc, ca) = self.core.act_batch(&batch.states)?;
        let joint: Array2<f64> = concatenate(Axis(1), &[ra.view(), ca.view()]).expect("same rows");
        let (q, dq) = self.critic.value_and_action_grad(&batch.states, &joint)?;
        let n = q.len() as f64;
        let dl = dq.mapv(|g| -g / n);
        let split = ra.ncols();
        let g_radio = self.radio.backward(&rc, &ra, &dl.slice(s![.., ..split]).to_owned())?;
        self.radio_opt.step(&mut self.radio.net, &g_radio, alr);
        if !self.freeze_core {
            let g_core = self.core.backward(&cc, &ca, &dl.slice(s![.., split..]).to_owned())?;
            self.core_opt.step(&mut self.core.net, &g_core, alr);
        }

        target_update(&self.critic.net, &mut self.target_critic.net, h.target_smoothing);
        target_update(&self.radio.net, &mut self.target_radio.net, h.target_smoothing);
        target_update(&self.core.net, &mut self.target_core.net, h.target_smoothing);
        self.updates += 1;
        Ok(Losses {
            critic,
            actor: -q.sum() / n,
        })
    }

    fn greedy(&self, state: &[f64]) -> Result<Vec<f64>, AgentError> {
        self.joint(state)
    }

    fn networks(&self) -> Vec<(&'static str, &Mlp)> {
        vec![
            ("radio_actor", &self.radio.net),
            ("core_actor", &self.core.net),
            ("critic", &self.critic.net),
        ]
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MaddpgTrainer {
    pub freeze_core: bool,
}

impl Trainer for MaddpgTrainer {
    fn name(&self) -> &'static str {
        "maddpg"
    }

    fn train(&self, cfg: &NetworkConfig, settings: &TrainSettings) -> Result<TrainReport, AgentError> {
        let (sd, _) = joint_dims(cfg);
        let layout = ActionLayout::new(cfg);
        let mut agent = MaddpgAgent::new(
            sd,
            [layout.radio(), layout.core()],
            &cfg.learning,
            self.freeze_core,
            &mut init_rng(settings.seed),
        )?;
        train_joint(self.name(), cfg, settings, &mut agent, LoopParams::from(&cfg.learning))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array1;
    use rand::SeedableRng;

    fn agent(freeze: bool) -> MaddpgAgent {
        let l = LearningConfig {
            hidden_sizes: vec![8],
            ..LearningConfig::default()
        };
        MaddpgAgent::new(3, [0..2, 2..5], &l, freeze, &mut ChaCha8Rng::seed_from_u64(0)).unwrap()
    }

    fn batch() -> Batch {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut m = |r, c| Array2::from_shape_fn((r, c), |_| rng.random_range(-1.0..1.0));
        Batch {
            states: m(8, 3),
            actions: m(8, 5),
            rewards: Array1::linspace(0.0, 1.0, 8),
            next_states: m(8, 3),
        }
    }

    #[test]
    fn slices_concatenate_to_full_action() {
        let a = agent(false);
        let act = a.greedy(&[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(act.len(), 5);
        assert!(act.iter().all(|x| x.abs() < 1.0));
        assert!(MaddpgAgent::new(3, [1..2, 2..5], &LearningConfig::default(), false, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn frozen_core_actor_never_moves() {
        let mut a = agent(true);
        let core0 = a.core.clone();
        let radio0 = a.radio.clone();
        let b = batch();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            a.update(&b, &mut rng).unwrap();
        }
        assert_eq!(a.core, core0);
        assert_ne!(a.radio, radio0);

        let mut b2 = agent(false);
        for _ in 0..20 {
            b2.update(&b, &mut rng).unwrap();
        }
        assert_ne!(b2.core, core0);
    }
}
