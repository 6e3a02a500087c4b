//! Per-decision signalling payload between the orchestrator and the radio
//! and core controllers.

use anyhow::bail;
use serde::Serialize;

use jrnra_core::NetworkConfig;

/// Every reported quantity travels as one fixed-length field.
pub const FIELD_BITS: u64 = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Overhead {
    pub method: String,
    pub orchestrator_radio: u64,
    pub orchestrator_core: u64,
    /// The requested-rate field passed between radio and core.
    pub requested_rate: u64,
}

impl Overhead {
    pub fn total(&self) -> u64 {
        self.orchestrator_radio + self.orchestrator_core + self.requested_rate
    }
}

/// Bits exchanged per decision by `method`.
pub fn signaling_overhead(cfg: &NetworkConfig, method: &str) -> anyhow::Result<Overhead> {
    let channel = FIELD_BITS * (cfg.num_bs * cfg.num_subcarriers * cfg.num_users) as u64;
    let (radio, core) = match method {
        "sac" | "ddpg" => (channel, channel),
        "maddpg" => (FIELD_BITS, FIELD_BITS),
        "disjoint" => (0, 0),
        other => bail!("no signalling model for method `{other}`"),
    };
    Ok(Overhead {
        method: method.to_string(),
        orchestrator_radio: radio,
        orchestrator_core: core,
        requested_rate: FIELD_BITS,
    })
}

pub const OVERHEAD_METHODS: [&str; 4] = ["sac", "ddpg", "maddpg", "disjoint"];

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(bs: usize, sc: usize, users: usize) -> NetworkConfig {
        NetworkConfig {
            num_bs: bs,
            num_subcarriers: sc,
            ..NetworkConfig::default()
        }
        .with_users(users)
    }

    #[test]
    fn no_users_leaves_only_the_rate_field() {
        let o = signaling_overhead(&shape(4, 10, 0), "sac").unwrap();
        assert_eq!(o.total(), FIELD_BITS);
    }

    #[test]
    fn disjoint_sends_only_the_rate() {
        let o = signaling_overhead(&shape(4, 10, 20), "disjoint").unwrap();
        assert_eq!((o.orchestrator_radio, o.orchestrator_core, o.requested_rate), (0, 0, 16));
        assert!(signaling_overhead(&shape(1, 1, 1), "random").is_err());
    }
}
