use serde::Serialize;

use super::decode::AllocationDecision;
use super::EnvError;
use crate::config::NetworkConfig;
use crate::nfv::{
    build_schedule, check_c4, check_c5, check_c6, cpu_energy, server_busy_times, server_cpu_load,
    server_storage_load, total_delay_with_radio, verify_schedule, CpuEnergy, DelayReport,
    EarliestReadyFirst, Placement, Schedule,
};
use crate::objective::{energy_efficiency, total_energy, EnergyBreakdown};
use crate::radio::{
    check_c1, check_c2, radio_energy_with_circuit, user_radio_energy, user_rates, ChannelState,
    RadioAction,
};

/// Which objective a step optimises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum ObjectiveMode {
    /// Sum rate over weighted radio plus CPU energy, with admission control.
    #[default]
    Joint,
    /// Sum rate over radio energy only; no admission, placement ignored.
    RadioOnly,
    /// Sum rate over CPU energy only, with admission control.
    CoreOnly,
}

impl ObjectiveMode {
    /// `(mu1, mu2)` weights this mode puts on radio and CPU energy.
    pub fn weights(self, cfg: &NetworkConfig) -> (f64, f64) {
        match self {
            Self::Joint => (cfg.mu1, cfg.mu2),
            Self::RadioOnly => (cfg.mu1, 0.0),
            Self::CoreOnly => (0.0, cfg.mu2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvalOptions {
    pub mode: ObjectiveMode,
    /// Seconds of every deadline reserved for the radio segment.
    pub radio_delay: f64,
}

impl EvalOptions {
    pub fn joint() -> Self {
        Self::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ConstraintFlags {
    pub c1: bool,
    pub c2: bool,
    pub c3: bool,
    pub c4: bool,
    pub c5: bool,
    pub c6: bool,
    pub c7: bool,
    pub c8: bool,
}

impl ConstraintFlags {
    pub fn all(&self) -> bool {
        self.c1 && self.c2 && self.c3 && self.c4 && self.c5 && self.c6 && self.c7 && self.c8
    }
}

/// Everything computed for one decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// The decision after rejected users were stripped.
    pub decision: AllocationDecision,
    pub admitted: Vec<usize>,
    /// Users in the order they were rejected.
    pub dropped: Vec<usize>,
    /// Per-user rate, zero for rejected users.
    pub rates: Vec<f64>,
    pub sum_rate: f64,
    pub schedule: Schedule,
    pub delays: DelayReport,
    pub cpu: CpuEnergy,
    pub busy: Vec<f64>,
    pub energy: EnergyBreakdown,
    pub flags: ConstraintFlags,
    pub energy_efficiency: f64,
    pub reward: f64,
}

struct Snapshot {
    radio: RadioAction,
    placement: Placement,
    rates: Vec<f64>,
    schedule: Schedule,
    delays: DelayReport,
    busy: Vec<f64>,
}

fn snapshot(
    cfg: &NetworkConfig,
    ch: &ChannelState,
    decision: &AllocationDecision,
    active: &[bool],
    radio_delay: f64,
) -> Result<Snapshot, EnvError> {
    let mut radio = decision.radio.clone();
    let mut placement = decision.placement.clone();
    for (u, &on) in active.iter().enumerate() {
        if !on {
            radio.clear_user(u);
            placement.remove_user(u);
        }
    }
    let rates = user_rates(cfg, ch, &radio);
    let schedule = build_schedule(&placement, cfg, &EarliestReadyFirst)?;
    if !verify_schedule(&schedule, &placement, cfg) {
        return Err(EnvError::InconsistentSchedule);
    }
    let delays = total_delay_with_radio(&schedule, &placement, cfg, radio_delay);
    let busy = server_busy_times(&schedule, cfg);
    Ok(Snapshot {
        radio,
        placement,
        rates,
        schedule,
        delays,
        busy,
    })
}

fn overloaded_servers(cfg: &NetworkConfig, s: &Snapshot) -> Vec<bool> {
    (0..cfg.num_servers())
        .map(|n| {
            server_cpu_load(cfg, &s.placement, n) > cfg.servers[n].cpu_capacity
                || server_storage_load(cfg, &s.placement, n) > cfg.servers[n].storage_capacity
                || s.busy[n] > cfg.time_unit
        })
        .collect()
}

/// Rate per unit of the energy a user is directly responsible for.
fn contribution(cfg: &NetworkConfig, s: &Snapshot, u: usize, w1: f64, w2: f64) -> f64 {
    let e_radio = user_radio_energy(&s.radio, u, cfg.time_unit);
    let e_cpu: f64 = s
        .schedule
        .entries
        .iter()
        .filter(|e| e.user == u)
        .map(|e| cfg.servers[e.server].power_active_cpu * e.duration)
        .sum();
    let denom = w1 * e_radio + w2 * e_cpu;
    let rate = s.rates[u];
    if denom > 0.0 {
        rate / denom
    } else if rate > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Rejects users one at a time until every admitted user meets its rate,
/// capacity and deadline constraints. Each round drops the violator with the
/// smallest individual EE contribution (ties to the lowest index).
///
/// Returns the activity mask and the rejection order.
pub fn admit_users(
    cfg: &NetworkConfig,
    ch: &ChannelState,
    decision: &AllocationDecision,
    opts: &EvalOptions,
) -> Result<(Vec<bool>, Vec<usize>), EnvError> {
    let (w1, w2) = opts.mode.weights(cfg);
    let mut active = vec![true; cfg.num_users];
    let mut dropped = Vec::new();
    loop {
        let s = snapshot(cfg, ch, decision, &active, opts.radio_delay)?;
        let bad = overloaded_servers(cfg, &s);
        let candidates: Vec<usize> = (0..cfg.num_users)
            .filter(|&u| active[u])
            .filter(|&u| {
                s.rates[u] < cfg.user_service(u).rate_min
                    || s.delays.is_violated(u)
                    || s.placement
                        .bindings
                        .iter()
                        .any(|b| b.user == u && bad[b.server])
            })
            .collect();
        let Some(victim) = candidates.into_iter().min_by(|&a, &b| {
            contribution(cfg, &s, a, w1, w2)
                .total_cmp(&contribution(cfg, &s, b, w1, w2))
                .then(a.cmp(&b))
        }) else {
            return Ok((active, dropped));
        };
        active[victim] = false;
        dropped.push(victim);
    }
}

/// Runs admission (unless radio-only), schedules, and computes energies,
/// constraint flags, EE and reward.
pub fn evaluate_decision(
    cfg: &NetworkConfig,
    ch: &ChannelState,
    decision: &AllocationDecision,
    opts: &EvalOptions,
) -> Result<Evaluation, EnvError> {
    let (active, dropped, decision) = match opts.mode {
        ObjectiveMode::RadioOnly => {
            let radio_only = AllocationDecision {
                radio: decision.radio.clone(),
                placement: Placement::new(),
            };
            (vec![true; cfg.num_users], Vec::new(), radio_only)
        }
        _ => {
            let (active, dropped) = admit_users(cfg, ch, decision, opts)?;
            (active, dropped, decision.clone())
        }
    };
    let s = snapshot(cfg, ch, &decision, &active, opts.radio_delay)?;
    let cpu = cpu_energy(&s.schedule, &s.placement, cfg)?;
    let e_radio = radio_energy_with_circuit(&s.radio, cfg.time_unit, cfg.circuit_power_per_bs);
    let (w1, w2) = opts.mode.weights(cfg);
    let energy = total_energy(e_radio, cpu.total(), w1, w2);
    let sum_rate: f64 = s.rates.iter().sum();
    let ee = energy_efficiency(sum_rate, &energy).unwrap_or(0.0);
    let reward = cfg.reward_scale * ee - cfg.rejection_penalty * dropped.len() as f64;

    let admitted: Vec<usize> = (0..cfg.num_users).filter(|&u| active[u]).collect();
    let flags = ConstraintFlags {
        c1: check_c1(&s.radio),
        c2: check_c2(&s.radio, cfg),
        c3: admitted
            .iter()
            .all(|&u| s.rates[u] >= cfg.user_service(u).rate_min),
        c4: check_c4(&s.placement, cfg),
        c5: check_c5(&s.placement, cfg),
        c6: check_c6(&s.placement, cfg),
        c7: verify_schedule(&s.schedule, &s.placement, cfg),
        c8: s.delays.violations.is_empty(),
    };
    Ok(Evaluation {
        decision: AllocationDecision {
            radio: s.radio,
            placement: s.placement,
        },
        admitted,
        dropped,
        rates: s.rates,
        sum_rate,
        schedule: s.schedule,
        delays: s.delays,
        cpu,
        busy: s.busy,
        energy,
        flags,
        energy_efficiency: ee,
        reward,
    })
}
