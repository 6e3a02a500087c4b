//! NFV-core model: VNF placement, capacity constraints, processing delay,
//! scheduling and CPU energy.

mod schedule;

pub use schedule::{
    audit_schedule, build_schedule, total_delay, total_delay_with_radio, verify_schedule,
    DelayReport, EarliestReadyFirst, OrderingPolicy, ReadyNf, Schedule, ScheduleAudit,
    ScheduleEntry,
};

use thiserror::Error;

use crate::config::{C5Interpretation, NetworkConfig};

#[derive(Debug, Error, PartialEq)]
pub enum NfvError {
    #[error("processing rate must be positive (got {0})")]
    NonPositiveRate(f64),
    #[error("packet size must be non-negative (got {0})")]
    NegativePacket(f64),
    #[error("user {user}: chain position {position} is not placed")]
    UnplacedNf { user: usize, position: usize },
    #[error("server {server} is busy {busy} s in a {time_unit} s time unit")]
    BusyExceedsTimeUnit {
        server: usize,
        busy: f64,
        time_unit: f64,
    },
}

/// NF `position` of `user`'s chain runs in VM `vm` hosted on `server`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Binding {
    pub user: usize,
    pub position: usize,
    pub server: usize,
    pub vm: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Placement {
    pub bindings: Vec<Binding>,
}

impl Placement {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(&mut self, user: usize, position: usize, server: usize, vm: usize) {
        self.bindings.push(Binding {
            user,
            position,
            server,
            vm,
        });
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn get(&self, user: usize, position: usize) -> Option<&Binding> {
        self.bindings
            .iter()
            .find(|b| b.user == user && b.position == position)
    }

    pub fn users(&self) -> Vec<usize> {
        let mut users: Vec<usize> = self.bindings.iter().map(|b| b.user).collect();
        users.sort_unstable();
        users.dedup();
        users
    }

    pub fn remove_user(&mut self, user: usize) {
        self.bindings.retain(|b| b.user != user);
    }

    pub fn on_server(&self, server: usize) -> impl Iterator<Item = &Binding> {
        self.bindings.iter().filter(move |b| b.server == server)
    }
}

/// Time to push `packet_bits` through an NF processing `q_rate` bits per time unit.
pub fn processing_delay(packet_bits: f64, q_rate: f64) -> Result<f64, NfvError> {
    if !(q_rate > 0.0) {
        return Err(NfvError::NonPositiveRate(q_rate));
    }
    if !(packet_bits >= 0.0) {
        return Err(NfvError::NegativePacket(packet_bits));
    }
    Ok(packet_bits / q_rate)
}

/// Processing time of NF `position` of `user`.
pub fn nf_duration(cfg: &NetworkConfig, user: usize, position: usize) -> f64 {
    let y = cfg.user_service(user).packet_bits;
    let q = cfg.processing_rate(cfg.nf_name(user, position));
    processing_delay(y, q).expect("validated config has positive rates and packet sizes")
}

/// Inter-server transfer time of one packet; zero within a server.
pub fn transfer_delay(cfg: &NetworkConfig, from: usize, to: usize, packet_bits: f64) -> f64 {
    if from == to {
        0.0
    } else {
        packet_bits / cfg.link_bandwidth(from, to)
    }
}

/// CPU demand one binding places on its server, VM overhead included.
pub fn cpu_demand(cfg: &NetworkConfig, b: &Binding) -> f64 {
    let y = cfg.user_service(b.user).packet_bits;
    let nf = cfg.nf_name(b.user, b.position);
    let per_packet = match cfg.c5_interpretation {
        C5Interpretation::Literal => y * cfg.processing_rate(nf),
        C5Interpretation::Cycles => y * cfg.pi_user(nf),
    };
    per_packet + cfg.vms[b.vm].cpu_overhead
}

/// Storage one binding occupies on its server: NF footprint, buffered packet
/// and VM overhead.
pub fn storage_demand(cfg: &NetworkConfig, b: &Binding) -> f64 {
    let y = cfg.user_service(b.user).packet_bits;
    (cfg.nf_storage_for(b.user) + y) + cfg.vms[b.vm].storage_overhead
}

pub fn server_cpu_load(cfg: &NetworkConfig, pl: &Placement, server: usize) -> f64 {
    pl.on_server(server).map(|b| cpu_demand(cfg, b)).sum()
}

pub fn server_storage_load(cfg: &NetworkConfig, pl: &Placement, server: usize) -> f64 {
    pl.on_server(server).map(|b| storage_demand(cfg, b)).sum()
}

/// Each NF is bound at most once, to a capable VM on the VM's own host.
pub fn check_c4(pl: &Placement, cfg: &NetworkConfig) -> bool {
    pl.bindings.iter().enumerate().all(|(i, b)| {
        let unique = !pl.bindings[..i]
            .iter()
            .any(|o| o.user == b.user && o.position == b.position);
        let valid = b.user < cfg.num_users
            && b.position < cfg.chain_len(b.user)
            && b.vm < cfg.vms.len()
            && cfg.vms[b.vm].host_server == b.server
            && cfg.vms[b.vm].can_run(cfg.nf_name(b.user, b.position));
        unique && valid
    })
}

/// CPU capacity of every server, boundary inclusive.
pub fn check_c5(pl: &Placement, cfg: &NetworkConfig) -> bool {
    (0..cfg.num_servers()).all(|n| server_cpu_load(cfg, pl, n) <= cfg.servers[n].cpu_capacity)
}

/// Storage and buffer capacity of every server, boundary inclusive.
pub fn check_c6(pl: &Placement, cfg: &NetworkConfig) -> bool {
    (0..cfg.num_servers())
        .all(|n| server_storage_load(cfg, pl, n) <= cfg.servers[n].storage_capacity)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CpuEnergy {
    pub active: f64,
    pub idle: f64,
}

impl CpuEnergy {
    pub fn total(&self) -> f64 {
        self.active + self.idle
    }
}

/// Busy time per server summed over all its VMs.
pub fn server_busy_times(sch: &Schedule, cfg: &NetworkConfig) -> Vec<f64> {
    let mut busy = vec![0.0; cfg.num_servers()];
    for e in &sch.entries {
        busy[e.server] += e.duration;
    }
    busy
}

/// Active draw while NFs run plus idle draw for the rest of the time unit.
pub fn cpu_energy(sch: &Schedule, _pl: &Placement, cfg: &NetworkConfig) -> Result<CpuEnergy, NfvError> {
    let busy = server_busy_times(sch, cfg);
    let mut energy = CpuEnergy::default();
    for e in &sch.entries {
        energy.active += cfg.servers[e.server].power_active_cpu * e.duration;
    }
    for (n, server) in cfg.servers.iter().enumerate() {
        if busy[n] > cfg.time_unit {
            return Err(NfvError::BusyExceedsTimeUnit {
                server: n,
                busy: busy[n],
                time_unit: cfg.time_unit,
            });
        }
        energy.idle += server.power_idle_cpu * (cfg.time_unit - busy[n]);
    }
    Ok(energy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ServerSpec, ServiceSpec, UserRequest, VmSpec, VnfSpec};

    /// One BS, `servers` servers each with one VM that runs "A".
    pub(crate) fn small_cfg(servers: usize, users: usize) -> NetworkConfig {
        let mut cfg = NetworkConfig::default();
        cfg.num_bs = 1;
        cfg.vnf_catalog = vec![VnfSpec {
            name: "A".into(),
            pi_user: 1.0,
        }];
        cfg.services = vec![ServiceSpec {
            name: "S".into(),
            chain: vec!["A".into()],
            latency_max: 0.1,
            rate_min: 0.0,
            packet_bits: 1000.0,
        }];
        cfg.servers = vec![ServerSpec::default(); servers];
        cfg.vms = (0..servers)
            .map(|n| VmSpec {
                host_server: n,
                cpu_overhead: 0.0,
                storage_overhead: 0.0,
                capability: vec!["A".into()],
            })
            .collect();
        cfg.num_users = users;
        cfg.user_requests = vec![
            UserRequest {
                bs: 0,
                service: "S".into()
            };
            users
        ];
        cfg
    }

    #[test]
    fn processing_delay_cases() {
        assert_eq!(processing_delay(0.0, 5.0), Ok(0.0));
        assert_eq!(processing_delay(1000.0, 1000.0), Ok(1.0));
        let fw = processing_delay(64000.0, 1e6 / 0.0009).unwrap();
        assert!((fw - 5.76e-5).abs() < 1e-18);
        assert_eq!(processing_delay(1.0, 0.0), Err(NfvError::NonPositiveRate(0.0)));
        assert!(processing_delay(1.0, -2.0).is_err());
    }

    #[test]
    fn empty_placement_is_feasible() {
        let cfg = NetworkConfig::default();
        let pl = Placement::new();
        assert!(check_c4(&pl, &cfg));
        assert!(check_c5(&pl, &cfg));
        assert!(check_c6(&pl, &cfg));
    }

    #[test]
    fn double_binding_breaks_c4() {
        let cfg = small_cfg(2, 1);
        let mut pl = Placement::new();
        pl.bind(0, 0, 0, 0);
        assert!(check_c4(&pl, &cfg));
        pl.bind(0, 0, 1, 1);
        assert!(!check_c4(&pl, &cfg));
    }

    #[test]
    fn c4_requires_capable_vm_on_its_host() {
        let mut cfg = small_cfg(2, 1);
        let mut pl = Placement::new();
        pl.bind(0, 0, 1, 0);
        assert!(!check_c4(&pl, &cfg));
        cfg.vms[0].capability = vec!["B".into()];
        let mut pl = Placement::new();
        pl.bind(0, 0, 0, 0);
        assert!(!check_c4(&pl, &cfg));
    }

    #[test]
    fn c5_boundary_is_inclusive() {
        let mut cfg = small_cfg(1, 1);
        cfg.vms[0].cpu_overhead = 200.0;
        // cycles reading: 1000 bits * pi 1.0 + 200 = 1200 = capacity
        let mut pl = Placement::new();
        pl.bind(0, 0, 0, 0);
        assert_eq!(server_cpu_load(&cfg, &pl, 0), 1200.0);
        assert!(check_c5(&pl, &cfg));
        cfg.vms[0].cpu_overhead = 200.5;
        assert!(!check_c5(&pl, &cfg));

        // literal reading: y * q = 1000 * (q_base / 1.0)
        cfg.c5_interpretation = C5Interpretation::Literal;
        cfg.vms[0].cpu_overhead = 0.0;
        cfg.q_base = 1.2;
        cfg.servers[0].cpu_capacity = 1200.0;
        assert_eq!(server_cpu_load(&cfg, &pl, 0), 1200.0);
        assert!(check_c5(&pl, &cfg));
    }

    #[test]
    fn c6_counts_footprint_packet_and_overhead() {
        let mut cfg = small_cfg(1, 2);
        cfg.vms[0].storage_overhead = 10.0;
        let mut pl = Placement::new();
        pl.bind(0, 0, 0, 0);
        pl.bind(1, 0, 0, 0);
        // (125 + 1000 + 10) per binding
        assert_eq!(server_storage_load(&cfg, &pl, 0), 2270.0);
        cfg.servers[0].storage_capacity = 2270.0;
        assert!(check_c6(&pl, &cfg));
        cfg.servers[0].storage_capacity = 2269.0;
        assert!(!check_c6(&pl, &cfg));
    }

    #[test]
    fn idle_servers_draw_idle_power() {
        let cfg = NetworkConfig::default();
        let e = cpu_energy(&Schedule::default(), &Placement::new(), &cfg).unwrap();
        assert_eq!(e.active, 0.0);
        assert_eq!(e.idle, 40.0);
    }

    #[test]
    fn half_busy_server() {
        let cfg = small_cfg(1, 1);
        let sch = Schedule {
            entries: vec![ScheduleEntry {
                user: 0,
                position: 0,
                server: 0,
                vm: 0,
                start: 0.0,
                duration: 0.5,
            }],
        };
        let e = cpu_energy(&sch, &Placement::new(), &cfg).unwrap();
        assert_eq!(e.total(), 15.0);

        let full = Schedule {
            entries: vec![ScheduleEntry {
                duration: 1.0,
                ..sch.entries[0]
            }],
        };
        assert_eq!(cpu_energy(&full, &Placement::new(), &cfg).unwrap().idle, 0.0);

        let over = Schedule {
            entries: vec![ScheduleEntry {
                duration: 1.5,
                ..sch.entries[0]
            }],
        };
        assert!(matches!(
            cpu_energy(&over, &Placement::new(), &cfg),
            Err(NfvError::BusyExceedsTimeUnit { server: 0, .. })
        ));
    }
}
