use std::collections::HashSet;
use std::fmt;

use super::NetworkConfig;

/// A single broken invariant, naming the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

struct Report(Vec<Violation>);

impl Report {
    fn push(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.0.push(Violation {
            field: field.into(),
            message: message.into(),
        });
    }

    fn positive(&mut self, field: impl Into<String>, value: f64) {
        if !(value > 0.0 && value.is_finite()) {
            self.push(field, format!("must be a positive finite number (got {value})"));
        }
    }

    fn nonneg(&mut self, field: impl Into<String>, value: f64) {
        if !(value >= 0.0 && value.is_finite()) {
            self.push(field, format!("must be a non-negative finite number (got {value})"));
        }
    }

    fn count(&mut self, field: &str, value: usize) {
        if value == 0 {
            self.push(field, "must be > 0 (got 0)");
        }
    }
}

/// Checks every scenario invariant. An empty result means the config is usable.
pub fn validate_config(cfg: &NetworkConfig) -> Vec<Violation> {
    let mut r = Report(Vec::new());

    r.count("num_bs", cfg.num_bs);
    r.count("num_users", cfg.num_users);
    r.count("num_subcarriers", cfg.num_subcarriers);
    r.positive("subcarrier_bandwidth", cfg.subcarrier_bandwidth);
    r.positive("max_power_per_bs", cfg.max_power_per_bs);
    if !cfg.noise_dbm.is_finite() {
        r.push("noise_dbm", format!("must be finite (got {})", cfg.noise_dbm));
    }
    r.positive("area_side", cfg.area_side);
    r.nonneg("circuit_power_per_bs", cfg.circuit_power_per_bs);
    r.positive("min_distance", cfg.min_distance);
    r.nonneg("mu1", cfg.mu1);
    r.nonneg("mu2", cfg.mu2);
    if !(cfg.mu1 + cfg.mu2 > 0.0) {
        r.push("mu1", "mu1 + mu2 must be > 0");
    }
    r.positive("time_unit", cfg.time_unit);
    r.positive("reward_scale", cfg.reward_scale);
    r.positive("q_base", cfg.q_base);
    if let Some(psi) = cfg.nf_storage {
        r.nonneg("nf_storage", psi);
    }
    r.nonneg("rejection_penalty", cfg.rejection_penalty);

    if cfg.servers.is_empty() {
        r.push("servers", "at least one server is required");
    }
    for (n, s) in cfg.servers.iter().enumerate() {
        r.positive(format!("server.{n}.cpu_capacity"), s.cpu_capacity);
        r.positive(format!("server.{n}.storage_capacity"), s.storage_capacity);
        r.positive(format!("server.{n}.power_active_cpu"), s.power_active_cpu);
        r.positive(format!("server.{n}.power_idle_cpu"), s.power_idle_cpu);
        r.positive(format!("server.{n}.link_bandwidth"), s.link_bandwidth);
    }

    let mut vnf_names = HashSet::new();
    for v in &cfg.vnf_catalog {
        if !vnf_names.insert(v.name.as_str()) {
            r.push(format!("vnf.{}.name", v.name), "duplicate VNF name");
        }
        r.positive(format!("vnf.{}.pi_user", v.name), v.pi_user);
    }

    if cfg.vms.is_empty() {
        r.push("vms", "at least one VM is required");
    }
    for (i, vm) in cfg.vms.iter().enumerate() {
        if vm.host_server >= cfg.servers.len() {
            r.push(
                format!("vm.{i}.host_server"),
                format!(
                    "server {} does not exist ({} servers)",
                    vm.host_server,
                    cfg.servers.len()
                ),
            );
        }
        r.nonneg(format!("vm.{i}.cpu_overhead"), vm.cpu_overhead);
        r.nonneg(format!("vm.{i}.storage_overhead"), vm.storage_overhead);
        if vm.capability.is_empty() {
            r.push(format!("vm.{i}.capability"), "must list at least one VNF");
        }
        for f in &vm.capability {
            if !vnf_names.contains(f.as_str()) {
                r.push(format!("vm.{i}.capability"), format!("unknown VNF {f:?}"));
            }
        }
    }

    let mut service_names = HashSet::new();
    for s in &cfg.services {
        if !service_names.insert(s.name.as_str()) {
            r.push(format!("service.{}.name", s.name), "duplicate service name");
        }
        if s.chain.is_empty() {
            r.push(format!("service.{}.chain", s.name), "chain must not be empty");
        }
        for f in &s.chain {
            if !vnf_names.contains(f.as_str()) {
                r.push(format!("service.{}.chain", s.name), format!("unknown VNF {f:?}"));
            } else if !cfg.vms.iter().any(|vm| vm.can_run(f)) {
                r.push(
                    format!("service.{}.chain", s.name),
                    format!("no VM can run {f:?}"),
                );
            }
        }
        r.positive(format!("service.{}.latency_max", s.name), s.latency_max);
        r.nonneg(format!("service.{}.rate_min", s.name), s.rate_min);
        r.positive(format!("service.{}.packet_bits", s.name), s.packet_bits);
    }

    if cfg.user_requests.len() != cfg.num_users {
        r.push(
            "user_requests",
            format!(
                "{} requests for {} users",
                cfg.user_requests.len(),
                cfg.num_users
            ),
        );
    }
    for (u, req) in cfg.user_requests.iter().enumerate() {
        if req.bs >= cfg.num_bs {
            r.push(
                format!("user.{u}.bs"),
                format!("BS {} does not exist ({} BSs)", req.bs, cfg.num_bs),
            );
        }
        if !service_names.contains(req.service.as_str()) {
            r.push(
                format!("user.{u}.service"),
                format!("unknown service {:?}", req.service),
            );
        }
    }

    let l = &cfg.learning;
    r.count("agent.episode_len", l.episode_len);
    r.count("agent.batch_size", l.batch_size);
    r.count("agent.replay_capacity", l.replay_capacity);
    if l.hidden_sizes.iter().any(|&h| h == 0) {
        r.push("agent.hidden_sizes", "layer widths must be > 0");
    }
    r.positive("agent.actor_lr", l.actor_lr);
    r.positive("agent.critic_lr", l.critic_lr);
    r.nonneg("agent.lr_decay", l.lr_decay);
    r.nonneg("agent.temperature", l.temperature);
    if !(0.0..=1.0).contains(&l.discount) {
        r.push("agent.discount", format!("must lie in [0, 1] (got {})", l.discount));
    }
    if !(0.0..=1.0).contains(&l.target_smoothing) {
        r.push(
            "agent.target_smoothing",
            format!("must lie in [0, 1] (got {})", l.target_smoothing),
        );
    }
    r.nonneg("agent.eps_start", l.eps_start);
    if !(l.eps_decay > 0.0 && l.eps_decay <= 1.0) {
        r.push("agent.eps_decay", format!("must lie in (0, 1] (got {})", l.eps_decay));
    }

    r.0
}
