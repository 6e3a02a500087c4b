//! Scenario description: base stations, users, servers, VMs, the VNF and
//! service catalogs, energy coefficients and learning hyperparameters.

mod catalog;
mod file;
mod validate;

pub use catalog::{builtin_catalog, builtin_services, builtin_vnfs};
pub use file::{load_config, parse_config, save_config, to_config_string};
pub use validate::{validate_config, Violation};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid config: {}", format_violations(.0))]
    Invalid(Vec<Violation>),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

/// One entry of the VNF catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct VnfSpec {
    pub name: String,
    /// Per-user processing requirement (dimensionless scale).
    pub pi_user: f64,
}

/// A service function chain together with its QoS requirements.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceSpec {
    pub name: String,
    /// Ordered VNF names the traffic traverses.
    pub chain: Vec<String>,
    /// Maximum tolerated end-to-end chain delay, seconds.
    pub latency_max: f64,
    /// Minimum downlink rate, bits/s/Hz.
    pub rate_min: f64,
    /// Bits generated per time unit (the packet size `y`).
    pub packet_bits: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServerSpec {
    pub cpu_capacity: f64,
    pub storage_capacity: f64,
    pub power_active_cpu: f64,
    pub power_idle_cpu: f64,
    /// Bandwidth of the direct link to every other server, bits/s.
    pub link_bandwidth: f64,
}

impl Default for ServerSpec {
    fn default() -> Self {
        Self {
            cpu_capacity: 1200.0,
            storage_capacity: 1e9,
            power_active_cpu: 20.0,
            power_idle_cpu: 10.0,
            link_bandwidth: 1e9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VmSpec {
    pub host_server: usize,
    pub cpu_overhead: f64,
    pub storage_overhead: f64,
    /// VNF names this VM is able to run.
    pub capability: Vec<String>,
}

impl VmSpec {
    pub fn can_run(&self, vnf: &str) -> bool {
        self.capability.iter().any(|c| c == vnf)
    }
}

/// Which BS serves a user and which service it requests.
#[derive(Debug, Clone, PartialEq)]
pub struct UserRequest {
    pub bs: usize,
    pub service: String,
}

/// How the per-NF CPU demand in the capacity constraint is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum C5Interpretation {
    /// `y * q` with `q` the processing rate, exactly as the constraint is written.
    Literal,
    /// `y * pi_user`, i.e. `pi_user` taken as CPU cycles per bit.
    #[default]
    Cycles,
}

impl C5Interpretation {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Literal => "literal",
            Self::Cycles => "cycles",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "literal" => Some(Self::Literal),
            "cycles" => Some(Self::Cycles),
            _ => None,
        }
    }
}

/// Hyperparameters consumed by the learning agents and episode driver.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningConfig {
    pub episode_len: usize,
    pub eval_episodes: usize,
    pub hidden_sizes: Vec<usize>,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Inverse-time decay rate for both learning-rate schedules.
    pub lr_decay: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
    pub warmup: usize,
    pub updates_per_step: usize,
    /// Entropy temperature.
    pub temperature: f64,
    pub discount: f64,
    pub target_smoothing: f64,
    pub eps_start: f64,
    pub eps_decay: f64,
}

impl Default for LearningConfig {
    fn default() -> Self {
        Self {
            episode_len: 100,
            eval_episodes: 10,
            hidden_sizes: vec![64, 64],
            actor_lr: 1e-5,
            critic_lr: 1e-4,
            lr_decay: 1e-4,
            batch_size: 32,
            replay_capacity: 100_000,
            warmup: 1000,
            updates_per_step: 1,
            temperature: 0.2,
            discount: 0.9,
            target_smoothing: 0.05,
            eps_start: 1.0,
            eps_decay: 0.9994,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub num_bs: usize,
    pub num_users: usize,
    pub num_subcarriers: usize,
    /// Bandwidth of one subcarrier, Hz.
    pub subcarrier_bandwidth: f64,
    pub max_power_per_bs: f64,
    /// Noise power spectral density, dBm/Hz.
    pub noise_dbm: f64,
    pub area_side: f64,
    /// Static circuit draw charged per BS in the radio energy, watts.
    pub circuit_power_per_bs: f64,
    /// Path loss `intercept + slope * log10(d_km)` in dB.
    pub path_loss_intercept: f64,
    pub path_loss_slope: f64,
    pub min_distance: f64,
    pub servers: Vec<ServerSpec>,
    pub vms: Vec<VmSpec>,
    pub vnf_catalog: Vec<VnfSpec>,
    pub services: Vec<ServiceSpec>,
    /// Indexed by user.
    pub user_requests: Vec<UserRequest>,
    pub mu1: f64,
    pub mu2: f64,
    /// Length of the optimisation snapshot, seconds.
    pub time_unit: f64,
    pub reward_scale: f64,
    /// Base NF processing rate; an NF runs at `q_base / pi_user` bits per time unit.
    pub q_base: f64,
    /// Per-NF storage footprint in bytes; `None` means `packet_bits / 8`.
    pub nf_storage: Option<f64>,
    pub c5_interpretation: C5Interpretation,
    pub rejection_penalty: f64,
    pub extended_state: bool,
    pub learning: LearningConfig,
}

pub const DEFAULT_SERVERS: usize = 4;
pub const DEFAULT_VMS_PER_SERVER: usize = 6;

impl Default for NetworkConfig {
    /// The simulation setting of the reference scenario: 4 BSs, 10 subcarriers
    /// sharing 200 kHz, 40 W per BS, -170 dBm/Hz noise, 1 km square.
    fn default() -> Self {
        let (vnf_catalog, services) = builtin_catalog();
        let num_users = 8;
        let num_bs = 4;
        let servers = vec![ServerSpec::default(); DEFAULT_SERVERS];
        let vms = default_vms(DEFAULT_SERVERS, DEFAULT_VMS_PER_SERVER, &vnf_catalog);
        let user_requests = round_robin_requests(num_users, num_bs, &services);
        Self {
            num_bs,
            num_users,
            num_subcarriers: 10,
            subcarrier_bandwidth: 20e3,
            max_power_per_bs: 40.0,
            noise_dbm: -170.0,
            area_side: 1000.0,
            circuit_power_per_bs: 0.0,
            path_loss_intercept: 128.1,
            path_loss_slope: 37.6,
            min_distance: 10.0,
            servers,
            vms,
            vnf_catalog,
            services,
            user_requests,
            mu1: 1.0,
            mu2: 1.0,
            time_unit: 1.0,
            reward_scale: 1.0,
            q_base: 1e6,
            nf_storage: None,
            c5_interpretation: C5Interpretation::default(),
            rejection_penalty: 0.0,
            extended_state: false,
            learning: LearningConfig::default(),
        }
    }
}

/// `per_server` VMs on each server, every VM able to run the whole catalog.
pub fn default_vms(servers: usize, per_server: usize, catalog: &[VnfSpec]) -> Vec<VmSpec> {
    let capability: Vec<String> = catalog.iter().map(|v| v.name.clone()).collect();
    (0..servers)
        .flat_map(|n| {
            let capability = capability.clone();
            (0..per_server).map(move |_| VmSpec {
                host_server: n,
                cpu_overhead: 10.0,
                storage_overhead: 1e6,
                capability: capability.clone(),
            })
        })
        .collect()
}

/// User `u` is served by BS `u mod J` and requests service `u mod S`.
pub fn round_robin_requests(
    users: usize,
    num_bs: usize,
    services: &[ServiceSpec],
) -> Vec<UserRequest> {
    (0..users)
        .map(|u| UserRequest {
            bs: u % num_bs.max(1),
            service: services
                .get(u % services.len().max(1))
                .map(|s| s.name.clone())
                .unwrap_or_default(),
        })
        .collect()
}

impl NetworkConfig {
    pub fn num_servers(&self) -> usize {
        self.servers.len()
    }

    pub fn vnf(&self, name: &str) -> Option<&VnfSpec> {
        self.vnf_catalog.iter().find(|v| v.name == name)
    }

    pub fn service(&self, name: &str) -> Option<&ServiceSpec> {
        self.services.iter().find(|s| s.name == name)
    }

    /// Service requested by user `u`. Panics on an unvalidated config.
    pub fn user_service(&self, u: usize) -> &ServiceSpec {
        let name = &self.user_requests[u].service;
        self.service(name)
            .unwrap_or_else(|| panic!("user {u} requests unknown service {name:?}"))
    }

    pub fn user_bs(&self, u: usize) -> usize {
        self.user_requests[u].bs
    }

    pub fn chain_len(&self, u: usize) -> usize {
        self.user_service(u).chain.len()
    }

    /// Name of the NF at chain position `m` of user `u`.
    pub fn nf_name(&self, u: usize, m: usize) -> &str {
        &self.user_service(u).chain[m]
    }

    pub fn pi_user(&self, vnf: &str) -> f64 {
        self.vnf(vnf)
            .unwrap_or_else(|| panic!("unknown VNF {vnf:?}"))
            .pi_user
    }

    /// Processing rate `q` of an NF, bits per time unit.
    pub fn processing_rate(&self, vnf: &str) -> f64 {
        self.q_base / self.pi_user(vnf)
    }

    /// Per-NF storage footprint for user `u`, bytes.
    pub fn nf_storage_for(&self, u: usize) -> f64 {
        self.nf_storage
            .unwrap_or_else(|| self.user_service(u).packet_bits / 8.0)
    }

    /// Per-subcarrier noise power in watts.
    pub fn noise_power(&self) -> f64 {
        10f64.powf(self.noise_dbm / 10.0) * 1e-3 * self.subcarrier_bandwidth
    }

    /// Bandwidth of the direct link between two servers.
    pub fn link_bandwidth(&self, a: usize, b: usize) -> f64 {
        self.servers[a]
            .link_bandwidth
            .min(self.servers[b].link_bandwidth)
    }

    /// `(server, vm)` pairs able to run `vnf`, in VM index order.
    pub fn capable_vms(&self, vnf: &str) -> Vec<(usize, usize)> {
        self.vms
            .iter()
            .enumerate()
            .filter(|(_, vm)| vm.can_run(vnf))
            .map(|(v, vm)| (vm.host_server, v))
            .collect()
    }

    /// Replace the user population with `users` round-robin requests.
    pub fn with_users(mut self, users: usize) -> Self {
        self.num_users = users;
        self.user_requests = round_robin_requests(users, self.num_bs, &self.services);
        self
    }
}
