//! Two-stage baseline: radio allocation is learned first against radio
//! energy alone, then placement is learned against CPU energy with the radio
//! policy frozen.

use std::ops::Range;

use jrnra_core::env::{ActionLayout, EnvError, EnvStep, Environment, EvalOptions, JointEnv, ObjectiveMode};
use jrnra_core::NetworkConfig;

use crate::sac::{SacAgent, SacHyper};
use crate::trainer::{
    evaluate_policy, init_rng, joint_dims, run_episodes, save_checkpoints, Agent, LoopParams, TrainReport,
    TrainSettings, Trainer,
};
use crate::AgentError;

/// Deadline share charged to the radio segment while learning placement.
pub const STAGE2_RADIO_DELAY: f64 = 0.010;

/// Exposes one slice of a joint environment's action; `fill` supplies the
/// full action for the current state and the slice overwrites its block.
pub struct SliceEnv<F> {
    inner: JointEnv,
    slice: Range<usize>,
    fill: F,
    state: Vec<f64>,
}

impl<F> SliceEnv<F>
where
    F: FnMut(&[f64]) -> Vec<f64> + Send,
{
    pub fn new(inner: JointEnv, slice: Range<usize>, fill: F) -> Self {
        Self {
            inner,
            slice,
            fill,
            state: Vec::new(),
        }
    }

    pub fn full_action(&mut self, part: &[f64]) -> Vec<f64> {
        let mut a = (self.fill)(&self.state);
        a[self.slice.clone()].copy_from_slice(part);
        a
    }
}

impl<F> Environment for SliceEnv<F>
where
    F: FnMut(&[f64]) -> Vec<f64> + Send,
{
    fn state_dim(&self) -> usize {
        self.inner.state_dim()
    }

    fn action_dim(&self) -> usize {
        self.slice.len()
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        self.state = self.inner.reset(seed);
        self.state.clone()
    }

    fn step(&mut self, action: &[f64]) -> Result<EnvStep, EnvError> {
        if action.len() != self.slice.len() {
            return Err(EnvError::ActionLength {
                expected: self.slice.len(),
                got: action.len(),
            });
        }
        let full = self.full_action(action);
        let out = self.inner.step(&full)?;
        self.state = out.next_state.clone();
        Ok(out)
    }
}

fn radio_only(layout: &ActionLayout, radio: &SacAgent, state: &[f64]) -> Result<Vec<f64>, AgentError> {
    let mut a = vec![0.0; layout.len()];
    a[layout.radio()].copy_from_slice(&radio.greedy(state)?);
    Ok(a)
}

pub struct DisjointTrainer;

impl DisjointTrainer {
    /// Episodes given to the radio stage; the core stage gets the rest.
    pub fn split(episodes: usize) -> (usize, usize) {
        let first = episodes.div_ceil(2);
        (first, episodes - first)
    }
}

impl Trainer for DisjointTrainer {
    fn name(&self) -> &'static str {
        "disjoint"
    }

    fn train(&self, cfg: &NetworkConfig, settings: &TrainSettings) -> Result<TrainReport, AgentError> {
        let l = &cfg.learning;
        let (sd, _) = joint_dims(cfg);
        let layout = ActionLayout::new(cfg);
        let (radio_range, core_range) = (layout.radio(), layout.core());
        let (e1, e2) = Self::split(settings.episodes);
        let params = LoopParams::from(l);
        let mut rng = init_rng(settings.seed);
        let hyper = SacHyper::from_learning(l);

        let mut radio = SacAgent::new(sd, radio_range.len(), &l.hidden_sizes, hyper.clone(), &mut rng)?;
        let mut curve = {
            let total = layout.len();
            let opts = EvalOptions {
                mode: ObjectiveMode::RadioOnly,
                radio_delay: 0.0,
            };
            let mut env = SliceEnv::new(JointEnv::new(cfg.clone(), opts), radio_range.clone(), move |_: &[f64]| {
                vec![0.0; total]
            });
            run_episodes(&mut env, &mut radio, params, e1, settings.seed, 0)?
        };

        let mut core = SacAgent::new(sd, core_range.len(), &l.hidden_sizes, hyper, &mut rng)?;
        {
            let opts = EvalOptions {
                mode: ObjectiveMode::CoreOnly,
                radio_delay: STAGE2_RADIO_DELAY,
            };
            let frozen = radio.clone();
            let lay = layout.clone();
            let mut env = SliceEnv::new(JointEnv::new(cfg.clone(), opts), core_range.clone(), move |s: &[f64]| {
                radio_only(&lay, &frozen, s).expect("radio policy sized for this environment")
            });
            curve.extend(run_episodes(&mut env, &mut core, params, e2, settings.seed, e1)?);
        }

        let final_ee = evaluate_policy(cfg, settings.seed, |s| {
            let mut a = radio_only(&layout, &radio, s)?;
            a[core_range.clone()].copy_from_slice(&core.greedy(s)?);
            Ok(a)
        })?;
        let mut checkpoints = Vec::new();
        if let Some(dir) = &settings.checkpoint_dir {
            checkpoints.extend(save_checkpoints(dir, "disjoint_radio", &radio)?);
            checkpoints.extend(save_checkpoints(dir, "disjoint_core", &core)?);
        }
        Ok(TrainReport {
            method: self.name().to_string(),
            curve,
            final_ee,
            checkpoints,
        })
    }
}
