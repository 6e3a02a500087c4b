//! The MDP wrapper: channel-gain state, action decoding, admission control
//! and reward emission.

mod decode;
mod evaluate;
mod layout;
mod normalize;
mod trace;

pub use decode::{decode_action, AllocationDecision};
pub use evaluate::{
    admit_users, evaluate_decision, ConstraintFlags, EvalOptions, Evaluation, ObjectiveMode,
};
pub use layout::{ActionLayout, NfSlot};
pub use normalize::StateNormalizer;
pub use trace::{state_digest, TraceRecord, TraceWriter};

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::NetworkConfig;
use crate::nfv::NfvError;
use crate::radio::{sample_channel, sample_fading, ChannelState};

#[derive(Debug, Error)]
pub enum EnvError {
    #[error(transparent)]
    Nfv(#[from] NfvError),
    #[error("schedule failed verification against its placement")]
    InconsistentSchedule,
    #[error("action has length {got}, expected {expected}")]
    ActionLength { expected: usize, got: usize },
    #[error("step called before reset")]
    NotReset,
    #[error("trace output: {0}")]
    Trace(#[from] std::io::Error),
}

/// What a trainer sees after one step.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvStep {
    pub next_state: Vec<f64>,
    pub reward: f64,
    pub energy_efficiency: f64,
    pub admitted: usize,
}

/// The contract every trainer drives.
pub trait Environment: Send {
    fn state_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    /// Contiguous action blocks owned by separate agents; one block by default.
    fn action_slices(&self) -> Vec<Range<usize>> {
        vec![0..self.action_dim()]
    }
    fn reset(&mut self, seed: u64) -> Vec<f64>;
    fn step(&mut self, action: &[f64]) -> Result<EnvStep, EnvError>;
}

/// Width of the observation a [`JointEnv`] built from `cfg` emits.
pub fn state_dim(cfg: &NetworkConfig) -> usize {
    let gains = cfg.num_users * cfg.num_bs * cfg.num_subcarriers;
    if cfg.extended_state {
        gains + cfg.num_servers()
    } else {
        gains
    }
}

/// Full result of [`JointEnv::step_detailed`].
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub next_state: Vec<f64>,
    pub evaluation: Evaluation,
}

/// Block-fading episodes: users are dropped on `reset`, and every step draws
/// fresh fading at those positions.
pub struct JointEnv {
    cfg: NetworkConfig,
    layout: ActionLayout,
    normalizer: StateNormalizer,
    opts: EvalOptions,
    rng: ChaCha8Rng,
    channel: Option<ChannelState>,
    utilization: Vec<f64>,
    steps: usize,
    trace: Option<TraceWriter>,
}

impl JointEnv {
    pub fn new(cfg: NetworkConfig, opts: EvalOptions) -> Self {
        let normalizer = StateNormalizer::fit(&cfg);
        Self::with_normalizer(cfg, opts, normalizer)
    }

    pub fn with_normalizer(cfg: NetworkConfig, opts: EvalOptions, normalizer: StateNormalizer) -> Self {
        let layout = ActionLayout::new(&cfg);
        let servers = cfg.num_servers();
        Self {
            cfg,
            layout,
            normalizer,
            opts,
            rng: ChaCha8Rng::seed_from_u64(0),
            channel: None,
            utilization: vec![0.0; servers],
            steps: 0,
            trace: None,
        }
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.cfg
    }

    pub fn layout(&self) -> &ActionLayout {
        &self.layout
    }

    pub fn options(&self) -> EvalOptions {
        self.opts
    }

    pub fn normalizer(&self) -> &StateNormalizer {
        &self.normalizer
    }

    pub fn channel(&self) -> Option<&ChannelState> {
        self.channel.as_ref()
    }

    pub fn set_trace(&mut self, trace: Option<TraceWriter>) {
        self.trace = trace;
    }

    pub fn take_trace(&mut self) -> Option<TraceWriter> {
        self.trace.take()
    }

    fn observe(&self) -> Vec<f64> {
        let ch = self.channel.as_ref().expect("observed after reset");
        let mut state = self.normalizer.normalize(ch);
        if self.cfg.extended_state {
            state.extend_from_slice(&self.utilization);
        }
        state
    }

    pub fn decode(&self, action: &[f64]) -> AllocationDecision {
        decode_action(action, &self.cfg, &self.layout)
    }

    /// Decode, admit, schedule and score `action` on the current channel,
    /// then move to the next fading block.
    pub fn step_detailed(&mut self, action: &[f64]) -> Result<StepOutcome, EnvError> {
        if action.len() != self.layout.len() {
            return Err(EnvError::ActionLength {
                expected: self.layout.len(),
                got: action.len(),
            });
        }
        let ch = self.channel.as_ref().ok_or(EnvError::NotReset)?;
        let decision = self.decode(action);
        let evaluation = evaluate_decision(&self.cfg, ch, &decision, &self.opts)?;
        let state = self.observe();
        if let Some(trace) = self.trace.as_mut() {
            trace.write(&TraceRecord::new(self.steps, &state, &evaluation))?;
        }

        self.utilization = evaluation
            .busy
            .iter()
            .map(|b| b / self.cfg.time_unit)
            .collect();
        let positions = ch.user_positions.clone();
        self.channel = Some(sample_fading(&self.cfg, positions, &mut self.rng));
        self.steps += 1;
        Ok(StepOutcome {
            next_state: self.observe(),
            evaluation,
        })
    }
}

impl Environment for JointEnv {
    fn state_dim(&self) -> usize {
        state_dim(&self.cfg)
    }

    fn action_dim(&self) -> usize {
        self.layout.len()
    }

    fn action_slices(&self) -> Vec<Range<usize>> {
        vec![self.layout.radio(), self.layout.core()]
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        self.channel = Some(sample_channel(&self.cfg, seed));
        self.rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        self.rng.random::<u64>();
        self.utilization = vec![0.0; self.cfg.num_servers()];
        self.steps = 0;
        self.observe()
    }

    fn step(&mut self, action: &[f64]) -> Result<EnvStep, EnvError> {
        let out = self.step_detailed(action)?;
        Ok(EnvStep {
            next_state: out.next_state,
            reward: out.evaluation.reward,
            energy_efficiency: out.evaluation.energy_efficiency,
            admitted: out.evaluation.admitted.len(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::reward;
    use crate::scenarios;

    #[test]
    fn reset_is_deterministic() {
        let cfg = scenarios::tiny_reference();
        let mut a = JointEnv::new(cfg.clone(), EvalOptions::joint());
        let mut b = JointEnv::new(cfg, EvalOptions::joint());
        assert_eq!(a.reset(4), b.reset(4));
        assert_ne!(a.reset(4), a.reset(5));
        assert_eq!(a.reset(4).len(), a.state_dim());
    }

    #[test]
    fn step_before_reset_fails() {
        let mut env = JointEnv::new(scenarios::tiny_reference(), EvalOptions::joint());
        let a = vec![0.0; env.action_dim()];
        assert!(matches!(env.step(&a), Err(EnvError::NotReset)));
    }

    #[test]
    fn steps_are_deterministic_and_consistent() {
        let cfg = scenarios::tiny_learning();
        let mut a = JointEnv::new(cfg.clone(), EvalOptions::joint());
        let mut b = JointEnv::new(cfg.clone(), EvalOptions::joint());
        a.reset(9);
        b.reset(9);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let act: Vec<f64> = (0..a.action_dim()).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let x = a.step_detailed(&act).unwrap();
            let y = b.step_detailed(&act).unwrap();
            assert_eq!(x.next_state, y.next_state);
            assert_eq!(x.evaluation, y.evaluation);
            let ev = &x.evaluation;
            assert!(ev.flags.all());
            let admitted_rate: f64 = ev.admitted.iter().map(|&u| ev.rates[u]).sum();
            assert_eq!(ev.sum_rate, admitted_rate);
            assert_eq!(ev.reward, reward(ev.sum_rate, &ev.energy, cfg.reward_scale).unwrap());
        }
    }

    #[test]
    fn extended_state_appends_utilization() {
        let mut cfg = scenarios::tiny_learning();
        cfg.extended_state = true;
        let mut env = JointEnv::new(cfg.clone(), EvalOptions::joint());
        let s = env.reset(0);
        assert_eq!(s.len(), env.state_dim());
        assert!(s[s.len() - cfg.num_servers()..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn wrong_action_length() {
        let mut env = JointEnv::new(scenarios::tiny_reference(), EvalOptions::joint());
        env.reset(0);
        assert!(matches!(
            env.step(&[0.0]),
            Err(EnvError::ActionLength { got: 1, .. })
        ));
    }
}
