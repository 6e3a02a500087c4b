//! Ready-made configurations.

use crate::config::{
    default_vms, round_robin_requests, LearningConfig, NetworkConfig, ServerSpec, ServiceSpec,
    VnfSpec,
};

/// The full-size default scenario.
pub fn builtin() -> NetworkConfig {
    NetworkConfig::default()
}

/// Channel seed of the reference oracle instance.
pub const REFERENCE_SEED: u64 = 3;

fn catalog_subset(names: &[&str]) -> Vec<VnfSpec> {
    let all = crate::config::builtin_vnfs();
    names
        .iter()
        .map(|n| all.iter().find(|v| v.name == *n).cloned().expect("builtin VNF"))
        .collect()
}

/// One BS, two users, two subcarriers, two servers with one VM each and a
/// two-NF chain. Small enough to enumerate exhaustively.
pub fn tiny_reference() -> NetworkConfig {
    let vnf_catalog = catalog_subset(&["NAT", "FW"]);
    let services = vec![ServiceSpec {
        name: "Voice".into(),
        chain: vec!["NAT".into(), "FW".into()],
        latency_max: 0.015,
        rate_min: 1.0,
        packet_bits: 64e3,
    }];
    let servers = vec![
        ServerSpec {
            cpu_capacity: 250.0,
            ..ServerSpec::default()
        };
        2
    ];
    let vms = default_vms(2, 1, &vnf_catalog);
    let user_requests = round_robin_requests(2, 1, &services);
    NetworkConfig {
        num_bs: 1,
        num_users: 2,
        num_subcarriers: 2,
        servers,
        vms,
        vnf_catalog,
        services,
        user_requests,
        q_base: 1e4,
        ..NetworkConfig::default()
    }
}

/// One BS, three users on three subcarriers, two servers with two VMs each
/// and a two-NF chain whose second NF is heavy. CPU capacity fits two heavy
/// NFs per server, and queueing two of them on one VM eats most of the
/// deadline, so placement, power and subcarrier choices all matter.
///
/// Fading is redrawn every step and no action changes the next state, so
/// the learning settings use no discounting.
pub fn tiny_learning() -> NetworkConfig {
    let vnf_catalog = catalog_subset(&["FW", "TM"]);
    let services = vec![ServiceSpec {
        name: "Stream".into(),
        chain: vec!["FW".into(), "TM".into()],
        latency_max: 0.1,
        rate_min: 8.0,
        packet_bits: 64e3,
    }];
    let servers = vec![
        ServerSpec {
            cpu_capacity: 2000.0,
            ..ServerSpec::default()
        };
        2
    ];
    let vms = default_vms(2, 2, &vnf_catalog);
    let user_requests = round_robin_requests(3, 1, &services);
    NetworkConfig {
        num_bs: 1,
        num_users: 3,
        num_subcarriers: 3,
        servers,
        vms,
        vnf_catalog,
        services,
        user_requests,
        q_base: 2e4,
        learning: LearningConfig {
            episode_len: 10,
            eval_episodes: 10,
            hidden_sizes: vec![32, 32],
            actor_lr: 1e-3,
            critic_lr: 1e-3,
            lr_decay: 1e-4,
            batch_size: 32,
            replay_capacity: 100_000,
            warmup: 200,
            updates_per_step: 2,
            temperature: 0.005,
            discount: 0.0,
            target_smoothing: 0.05,
            eps_start: 1.0,
            eps_decay: 0.9994,
        },
        ..NetworkConfig::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::validate_config;

    #[test]
    fn presets_validate() {
        for cfg in [builtin(), tiny_reference(), tiny_learning()] {
            assert!(validate_config(&cfg).is_empty(), "{:?}", validate_config(&cfg));
        }
    }

    #[test]
    fn reference_shape() {
        let cfg = tiny_reference();
        assert_eq!((cfg.num_bs, cfg.num_users, cfg.num_subcarriers), (1, 2, 2));
        assert_eq!((cfg.num_servers(), cfg.vms.len(), cfg.chain_len(0)), (2, 2, 2));
    }
}
