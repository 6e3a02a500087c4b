//! Exhaustive search over discretised decisions on tiny instances, and an
//! arithmetic path for rate, delay, energy and admission that shares no
//! computation code with the environment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::{C5Interpretation, NetworkConfig};
use crate::env::{evaluate_decision, ActionLayout, AllocationDecision, EvalOptions};
use crate::nfv::Placement;
use crate::radio::{ChannelState, RadioAction};

pub const MAX_ENUMERATION: u128 = 10_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("instance exceeds the tiny-instance limits: {0}")]
    TooLarge(String),
    #[error("enumeration of {0} decisions exceeds the bound of {MAX_ENUMERATION}")]
    EnumerationBound(u128),
    #[error("evaluation failed: {0}")]
    Evaluation(String),
}

/// A config small enough to enumerate, plus the per-subcarrier power levels.
#[derive(Debug, Clone, PartialEq)]
pub struct TinyInstance {
    pub cfg: NetworkConfig,
    pub power_grid: Vec<f64>,
}

impl TinyInstance {
    /// Default grid `{0, 1/4, 1/2, 3/4, 1} * P_max`.
    pub fn new(cfg: NetworkConfig) -> Result<Self, OracleError> {
        let p = cfg.max_power_per_bs;
        let grid = [0.0, 0.25, 0.5, 0.75, 1.0].iter().map(|f| f * p).collect();
        Self::with_grid(cfg, grid)
    }

    pub fn with_grid(cfg: NetworkConfig, power_grid: Vec<f64>) -> Result<Self, OracleError> {
        let mut problems = Vec::new();
        let max_chain = (0..cfg.num_users).map(|u| cfg.chain_len(u)).max().unwrap_or(0);
        for (name, value, limit) in [
            ("num_bs", cfg.num_bs, 2),
            ("num_users", cfg.num_users, 3),
            ("num_subcarriers", cfg.num_subcarriers, 3),
            ("servers", cfg.num_servers(), 2),
            ("vms", cfg.vms.len(), 2),
            ("chain length", max_chain, 3),
        ] {
            if value > limit {
                problems.push(format!("{name} = {value} > {limit}"));
            }
        }
        if power_grid.is_empty() {
            problems.push("empty power grid".into());
        }
        if !problems.is_empty() {
            return Err(OracleError::TooLarge(problems.join(", ")));
        }
        Ok(Self { cfg, power_grid })
    }

    /// Per `(j, k)`: off, or one associated user at one grid level.
    fn cell_choices(&self) -> Vec<Vec<Option<(usize, f64)>>> {
        let cfg = &self.cfg;
        let mut cells = Vec::new();
        for j in 0..cfg.num_bs {
            for _k in 0..cfg.num_subcarriers {
                let mut opts = vec![None];
                for u in (0..cfg.num_users).filter(|&u| cfg.user_bs(u) == j) {
                    for &p in &self.power_grid {
                        opts.push(Some((u, p)));
                    }
                }
                cells.push(opts);
            }
        }
        cells
    }

    fn slot_choices(&self) -> Vec<(usize, usize, Vec<(usize, usize)>)> {
        let cfg = &self.cfg;
        let mut slots = Vec::new();
        for u in 0..cfg.num_users {
            for m in 0..cfg.chain_len(u) {
                slots.push((u, m, cfg.capable_vms(cfg.nf_name(u, m))));
            }
        }
        slots
    }

    /// Number of decisions `enumerate_best` would visit.
    pub fn enumeration_size(&self) -> u128 {
        let radio: u128 = self.cell_choices().iter().map(|c| c.len() as u128).product();
        let core: u128 = self
            .slot_choices()
            .iter()
            .map(|(_, _, o)| o.len() as u128)
            .product();
        radio.saturating_mul(core)
    }
}

/// Mixed-radix digits of `index`, least significant first.
fn digits(mut index: u128, radices: &[usize]) -> Vec<usize> {
    radices
        .iter()
        .map(|&r| {
            let d = (index % r as u128) as usize;
            index /= r as u128;
            d
        })
        .collect()
}

/// Result of the oracle's own evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleEval {
    pub sum_rate: f64,
    pub energy: f64,
    pub energy_efficiency: f64,
    pub reward: f64,
    pub admitted: Vec<usize>,
}

struct Job {
    server: usize,
    vm: usize,
    duration: f64,
}

/// Rate of every user, summed directly from the gains.
fn rates(cfg: &NetworkConfig, ch: &ChannelState, rho: &[Vec<Vec<bool>>], p: &[Vec<Vec<f64>>]) -> Vec<f64> {
    let noise = 10f64.powf((cfg.noise_dbm - 30.0) / 10.0) * cfg.subcarrier_bandwidth;
    let (nu, nj, nk) = (cfg.num_users, cfg.num_bs, cfg.num_subcarriers);
    let mut out = vec![0.0; nu];
    for u in 0..nu {
        for j in 0..nj {
            for k in 0..nk {
                if !rho[u][j][k] {
                    continue;
                }
                let mut interf = 0.0;
                for j2 in (0..nj).filter(|&x| x != j) {
                    let tx: f64 = (0..nu).filter(|&v| rho[v][j2][k]).map(|v| p[v][j2][k]).sum();
                    interf += ch.gains[[u, j2, k]] * tx;
                }
                let gamma = p[u][j][k] * ch.gains[[u, j, k]] / (noise + interf);
                out[u] += (1.0 + gamma).log2();
            }
        }
    }
    out
}

/// Jobs per user in chain order, given who is still admitted.
fn jobs(cfg: &NetworkConfig, pl: &Placement, active: &[bool]) -> Vec<Vec<Job>> {
    (0..cfg.num_users)
        .map(|u| {
            if !active[u] {
                return Vec::new();
            }
            let svc = cfg.user_service(u);
            svc.chain
                .iter()
                .enumerate()
                .filter_map(|(m, nf)| {
                    let b = pl.bindings.iter().find(|b| b.user == u && b.position == m)?;
                    let pi = cfg.vnf_catalog.iter().find(|v| &v.name == nf)?.pi_user;
                    Some(Job {
                        server: b.server,
                        vm: b.vm,
                        duration: svc.packet_bits * pi / cfg.q_base,
                    })
                })
                .collect()
        })
        .collect()
}

fn hop(cfg: &NetworkConfig, a: usize, b: usize, bits: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let bw = f64::min(cfg.servers[a].link_bandwidth, cfg.servers[b].link_bandwidth);
    bits / bw
}

/// Start time per `(user, position)`: repeatedly release the pending NF
/// whose input arrived first, at the later of arrival and VM availability.
fn starts(cfg: &NetworkConfig, chains: &[Vec<Job>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = chains.iter().map(|c| vec![0.0; c.len()]).collect();
    let mut vm_free = vec![0.0; cfg.vms.len()];
    let mut done = vec![0usize; chains.len()];
    loop {
        let mut pick: Option<(f64, usize)> = None;
        for (u, chain) in chains.iter().enumerate() {
            let m = done[u];
            if m >= chain.len() {
                continue;
            }
            let arrival = if m == 0 {
                0.0
            } else {
                let prev = &chain[m - 1];
                out[u][m - 1]
                    + prev.duration
                    + hop(cfg, prev.server, chain[m].server, cfg.user_service(u).packet_bits)
            };
            if pick.is_none_or(|(t, _)| arrival < t) {
                pick = Some((arrival, u));
            }
        }
        let Some((arrival, u)) = pick else {
            return out;
        };
        let job = &chains[u][done[u]];
        let t = f64::max(arrival, vm_free[job.vm]);
        vm_free[job.vm] = t + job.duration;
        out[u][done[u]] = t;
        done[u] += 1;
    }
}

/// Independent scorer used as the oracle's ground truth.
pub fn oracle_evaluate(cfg: &NetworkConfig, ch: &ChannelState, d: &AllocationDecision) -> OracleEval {
    let (nu, nj, nk) = (cfg.num_users, cfg.num_bs, cfg.num_subcarriers);
    let mut active = vec![true; nu];
    loop {
        let rho: Vec<Vec<Vec<bool>>> = (0..nu)
            .map(|u| (0..nj).map(|j| (0..nk).map(|k| active[u] && d.radio.rho[[u, j, k]]).collect()).collect())
            .collect();
        let p: Vec<Vec<Vec<f64>>> = (0..nu)
            .map(|u| (0..nj).map(|j| (0..nk).map(|k| if rho[u][j][k] { d.radio.power[[u, j, k]] } else { 0.0 }).collect()).collect())
            .collect();
        let r = rates(cfg, ch, &rho, &p);
        let chains = jobs(cfg, &d.placement, &active);
        let t0 = starts(cfg, &chains);

        let mut busy = vec![0.0; cfg.num_servers()];
        let mut cpu_load = vec![0.0; cfg.num_servers()];
        let mut storage = vec![0.0; cfg.num_servers()];
        let mut active_energy = vec![0.0; nu];
        let mut delay = vec![0.0f64; nu];
        for (u, chain) in chains.iter().enumerate() {
            let svc = cfg.user_service(u);
            let y = svc.packet_bits;
            for (m, job) in chain.iter().enumerate() {
                let srv = &cfg.servers[job.server];
                let vm = &cfg.vms[job.vm];
                let pi = cfg.pi_user(&svc.chain[m]);
                busy[job.server] += job.duration;
                cpu_load[job.server] += vm.cpu_overhead
                    + match cfg.c5_interpretation {
                        C5Interpretation::Literal => y * (cfg.q_base / pi),
                        C5Interpretation::Cycles => y * pi,
                    };
                let psi = cfg.nf_storage.unwrap_or(y / 8.0);
                storage[job.server] += psi + y + vm.storage_overhead;
                active_energy[u] += srv.power_active_cpu * job.duration;
                let incoming = if m == 0 { 0.0 } else { hop(cfg, chain[m - 1].server, job.server, y) };
                delay[u] = delay[u].max(t0[u][m] + job.duration + incoming);
            }
        }
        let overloaded: Vec<bool> = (0..cfg.num_servers())
            .map(|n| {
                let s = &cfg.servers[n];
                cpu_load[n] > s.cpu_capacity || storage[n] > s.storage_capacity || busy[n] > cfg.time_unit
            })
            .collect();

        let mut worst: Option<(f64, usize)> = None;
        for u in (0..nu).filter(|&u| active[u]) {
            let svc = cfg.user_service(u);
            let late = !chains[u].is_empty() && delay[u] > svc.latency_max;
            let slow = r[u] < svc.rate_min;
            let crowded = chains[u].iter().any(|j| overloaded[j.server]);
            if !(late || slow || crowded) {
                continue;
            }
            let own_radio: f64 = p[u].iter().flatten().sum::<f64>() * cfg.time_unit;
            let denom = cfg.mu1 * own_radio + cfg.mu2 * active_energy[u];
            let score = match (denom > 0.0, r[u] > 0.0) {
                (true, _) => r[u] / denom,
                (false, true) => f64::INFINITY,
                (false, false) => 0.0,
            };
            if worst.is_none_or(|(w, _)| score < w) {
                worst = Some((score, u));
            }
        }
        if let Some((_, u)) = worst {
            active[u] = false;
            continue;
        }

        let radiated: f64 = p.iter().flatten().flatten().sum();
        let e_radio = cfg.time_unit * (radiated + nj as f64 * cfg.circuit_power_per_bs);
        let e_cpu: f64 = (0..cfg.num_servers())
            .map(|n| {
                let s = &cfg.servers[n];
                s.power_active_cpu * busy[n] + s.power_idle_cpu * (cfg.time_unit - busy[n])
            })
            .sum();
        let energy = cfg.mu1 * e_radio + cfg.mu2 * e_cpu;
        let sum_rate: f64 = r.iter().sum();
        let ee = if energy > 0.0 { sum_rate / energy } else { 0.0 };
        let dropped = active.iter().filter(|a| !**a).count() as f64;
        return OracleEval {
            sum_rate,
            energy,
            energy_efficiency: ee,
            reward: cfg.reward_scale * ee - cfg.rejection_penalty * dropped,
            admitted: (0..nu).filter(|&u| active[u]).collect(),
        };
    }
}

/// Grid optimum of the energy-efficiency problem.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub best_ee: f64,
    pub decision: AllocationDecision,
    /// Position of the optimum in the enumeration order.
    pub index: u128,
    pub visited: u128,
}

fn build_decision(inst: &TinyInstance, cells: &[Vec<Option<(usize, f64)>>], slots: &[(usize, usize, Vec<(usize, usize)>)], radio_digits: &[usize], core_digits: &[usize]) -> AllocationDecision {
    let cfg = &inst.cfg;
    let mut radio = RadioAction::for_config(cfg);
    for (c, &d) in radio_digits.iter().enumerate() {
        if let Some((u, p)) = cells[c][d] {
            let (j, k) = (c / cfg.num_subcarriers, c % cfg.num_subcarriers);
            radio.rho[[u, j, k]] = true;
            radio.power[[u, j, k]] = p;
        }
    }
    let mut placement = Placement::new();
    for (s, &d) in core_digits.iter().enumerate() {
        let (u, m, ref opts) = slots[s];
        let (server, vm) = opts[d];
        placement.bind(u, m, server, vm);
    }
    AllocationDecision { radio, placement }
}

fn within_budget(cfg: &NetworkConfig, radio: &RadioAction) -> bool {
    (0..cfg.num_bs).all(|j| {
        let total: f64 = (0..cfg.num_users)
            .flat_map(|u| (0..cfg.num_subcarriers).map(move |k| (u, k)))
            .filter(|&(u, k)| radio.rho[[u, j, k]])
            .map(|(u, k)| radio.power[[u, j, k]])
            .sum();
        total <= cfg.max_power_per_bs
    })
}

/// Visits every subcarrier/power/placement combination on the grid that
/// respects the power budget and keeps the best EE. Ties go to the earliest
/// decision in enumeration order.
pub fn enumerate_best(inst: &TinyInstance, ch: &ChannelState) -> Result<OracleResult, OracleError> {
    let size = inst.enumeration_size();
    if size > MAX_ENUMERATION {
        return Err(OracleError::EnumerationBound(size));
    }
    let cells = inst.cell_choices();
    let slots = inst.slot_choices();
    let radix_radio: Vec<usize> = cells.iter().map(Vec::len).collect();
    let radix_core: Vec<usize> = slots.iter().map(|s| s.2.len()).collect();
    let n_radio: u128 = radix_radio.iter().map(|&r| r as u128).product();
    let n_core: u128 = radix_core.iter().map(|&r| r as u128).product();

    let best = (0..n_radio as u64)
        .into_par_iter()
        .filter_map(|ri| {
            let rd = digits(ri as u128, &radix_radio);
            let probe = build_decision(inst, &cells, &slots, &rd, &digits(0, &radix_core));
            if !within_budget(&inst.cfg, &probe.radio) {
                return None;
            }
            let mut local: Option<(f64, u128)> = None;
            for ci in 0..n_core {
                let d = build_decision(inst, &cells, &slots, &rd, &digits(ci, &radix_core));
                let ee = oracle_evaluate(&inst.cfg, ch, &d).energy_efficiency;
                let idx = ri as u128 * n_core + ci;
                if local.is_none_or(|(b, _)| ee > b) {
                    local = Some((ee, idx));
                }
            }
            local
        })
        .reduce_with(|a, b| match a.0.total_cmp(&b.0) {
            std::cmp::Ordering::Greater => a,
            std::cmp::Ordering::Less => b,
            std::cmp::Ordering::Equal => {
                if a.1 <= b.1 {
                    a
                } else {
                    b
                }
            }
        });
    let (best_ee, index) = best.ok_or(OracleError::Evaluation("no decision within the power budget".into()))?;
    let rd = digits(index / n_core, &radix_radio);
    let cd = digits(index % n_core, &radix_core);
    Ok(OracleResult {
        best_ee,
        decision: build_decision(inst, &cells, &slots, &rd, &cd),
        index,
        visited: size,
    })
}

/// Draws a decision from the same grid the oracle enumerates, respecting the
/// power budget.
pub fn random_grid_decision<R: Rng + ?Sized>(inst: &TinyInstance, rng: &mut R) -> AllocationDecision {
    let cells = inst.cell_choices();
    let slots = inst.slot_choices();
    let cd: Vec<usize> = slots.iter().map(|s| rng.random_range(0..s.2.len())).collect();
    loop {
        let rd: Vec<usize> = cells.iter().map(|c| rng.random_range(0..c.len())).collect();
        let d = build_decision(inst, &cells, &slots, &rd, &cd);
        if within_budget(&inst.cfg, &d.radio) {
            return d;
        }
    }
}

/// Something that scores a decision; the environment in production, test
/// doubles for fault injection.
pub trait DecisionEvaluator {
    fn reward(&self, cfg: &NetworkConfig, ch: &ChannelState, d: &AllocationDecision) -> Result<f64, String>;
}

/// Scores through the environment's own evaluation pipeline.
pub struct EnvEvaluator;

impl DecisionEvaluator for EnvEvaluator {
    fn reward(&self, cfg: &NetworkConfig, ch: &ChannelState, d: &AllocationDecision) -> Result<f64, String> {
        evaluate_decision(cfg, ch, d, &EvalOptions::joint())
            .map(|e| e.reward)
            .map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mismatch {
    pub sample: usize,
    pub env_reward: f64,
    pub oracle_reward: f64,
    pub decision: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub samples: usize,
    pub max_relative_error: f64,
    pub mismatches: Vec<Mismatch>,
}

pub const VERIFY_TOLERANCE: f64 = 1e-9;

fn relative_error(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / a.abs().max(b.abs())
}

/// Compares `evaluator` against [`oracle_evaluate`] on random grid decisions.
pub fn verify_env(
    inst: &TinyInstance,
    ch: &ChannelState,
    samples: usize,
    seed: u64,
    evaluator: &dyn DecisionEvaluator,
) -> VerifyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = VerifyReport {
        samples,
        max_relative_error: 0.0,
        mismatches: Vec::new(),
    };
    for i in 0..samples {
        let d = random_grid_decision(inst, &mut rng);
        let oracle = oracle_evaluate(&inst.cfg, ch, &d).reward;
        let (env, err) = match evaluator.reward(&inst.cfg, ch, &d) {
            Ok(r) => (r, relative_error(r, oracle)),
            Err(_) => (f64::NAN, f64::INFINITY),
        };
        report.max_relative_error = report.max_relative_error.max(err);
        if !(err <= VERIFY_TOLERANCE) {
            report.mismatches.push(Mismatch {
                sample: i,
                env_reward: env,
                oracle_reward: oracle,
                decision: format!("{d:?}"),
            });
        }
    }
    report
}

/// JSON view of a decision: active assignments and NF bindings.
pub fn describe(layout: &ActionLayout, d: &AllocationDecision) -> serde_json::Value {
    let (u, j, k) = d.radio.rho.dim();
    let mut assignments = Vec::new();
    for ju in 0..j {
        for kk in 0..k {
            for uu in 0..u {
                if d.radio.rho[[uu, ju, kk]] {
                    assignments.push(serde_json::json!({
                        "bs": ju, "subcarrier": kk, "user": uu, "power": d.radio.power[[uu, ju, kk]],
                    }));
                }
            }
        }
    }
    let placement: Vec<_> = d
        .placement
        .bindings
        .iter()
        .map(|b| serde_json::json!({"user": b.user, "position": b.position, "server": b.server, "vm": b.vm}))
        .collect();
    serde_json::json!({
        "action_dim": layout.len(),
        "assignments": assignments,
        "placement": placement,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radio::sample_channel;
    use crate::scenarios::{tiny_reference, REFERENCE_SEED};

    fn reference() -> (TinyInstance, ChannelState) {
        let cfg = tiny_reference();
        let ch = sample_channel(&cfg, REFERENCE_SEED);
        (TinyInstance::new(cfg).unwrap(), ch)
    }

    #[test]
    fn size_limits_are_enforced() {
        assert!(matches!(
            TinyInstance::new(NetworkConfig::default()),
            Err(OracleError::TooLarge(_))
        ));
        let (inst, _) = reference();
        // (1 + 2 users * 5 levels)^2 cells * 2^4 placements
        assert_eq!(inst.enumeration_size(), 121 * 16);
    }

    #[test]
    fn zero_decision_scores_zero_on_both_paths() {
        let (inst, ch) = reference();
        let d = AllocationDecision::empty(&inst.cfg);
        assert_eq!(oracle_evaluate(&inst.cfg, &ch, &d).reward, 0.0);
        assert_eq!(EnvEvaluator.reward(&inst.cfg, &ch, &d), Ok(0.0));
    }

    #[test]
    fn single_user_single_subcarrier_picks_full_power() {
        let mut cfg = tiny_reference();
        cfg.num_subcarriers = 1;
        cfg = cfg.with_users(1);
        cfg.services[0].rate_min = 0.0;
        let ch = sample_channel(&cfg, 1);
        let p = cfg.max_power_per_bs;
        let inst = TinyInstance::with_grid(cfg, vec![0.0, p]).unwrap();
        let best = enumerate_best(&inst, &ch).unwrap();
        assert!(best.best_ee > 0.0);
        assert_eq!(best.decision.radio.power[[0, 0, 0]], p);
    }

    #[test]
    fn single_capable_vm_forces_placement() {
        let mut cfg = tiny_reference();
        cfg.vms[0].capability = vec!["NAT".into()];
        cfg.vms[1].capability = vec!["FW".into()];
        let ch = sample_channel(&cfg, 2);
        let inst = TinyInstance::new(cfg).unwrap();
        let best = enumerate_best(&inst, &ch).unwrap();
        for b in &best.decision.placement.bindings {
            assert_eq!(b.vm, b.position);
        }
    }

    #[test]
    fn oracle_bounds_sampled_decisions() {
        let (inst, ch) = reference();
        let best = enumerate_best(&inst, &ch).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let d = random_grid_decision(&inst, &mut rng);
            assert!(oracle_evaluate(&inst.cfg, &ch, &d).energy_efficiency <= best.best_ee);
        }
        let again = enumerate_best(&inst, &ch).unwrap();
        assert_eq!(best, again);
    }

    struct Corrupted;

    impl DecisionEvaluator for Corrupted {
        fn reward(&self, cfg: &NetworkConfig, ch: &ChannelState, d: &AllocationDecision) -> Result<f64, String> {
            let ev = evaluate_decision(cfg, ch, d, &EvalOptions::joint()).map_err(|e| e.to_string())?;
            let skewed = ev.energy.total_weighted + 1e-3;
            Ok(cfg.reward_scale * ev.sum_rate / skewed)
        }
    }

    #[test]
    fn fault_injection_is_detected() {
        let (inst, ch) = reference();
        let report = verify_env(&inst, &ch, 100, 1, &Corrupted);
        assert!(!report.mismatches.is_empty());
        let clean = verify_env(&inst, &ch, 100, 1, &EnvEvaluator);
        assert!(clean.mismatches.is_empty(), "{:?}", clean.mismatches.first());
    }
}
