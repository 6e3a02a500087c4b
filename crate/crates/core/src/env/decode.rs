use super::layout::ActionLayout;
use crate::config::NetworkConfig;
use crate::nfv::Placement;
use crate::radio::RadioAction;

/// A complete joint decision: `(rho, P)` plus the NF placement `beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationDecision {
    pub radio: RadioAction,
    pub placement: Placement,
}

impl AllocationDecision {
    pub fn empty(cfg: &NetworkConfig) -> Self {
        Self {
            radio: RadioAction::for_config(cfg),
            placement: Placement::new(),
        }
    }
}

/// Index of the largest value, ties to the lowest index.
fn argmax(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Maps a flat action in `[-1, 1]^A` to a decision.
///
/// Per `(j, k)` the largest logit among the users served by `j` and the
/// "off" entry wins. The winner transmits `(a + 1) / 2 * P_max / K`, and a
/// BS whose total still exceeds `P_max` is scaled down. Each chain NF goes to
/// its highest-scoring capable VM.
pub fn decode_action(a: &[f64], cfg: &NetworkConfig, layout: &ActionLayout) -> AllocationDecision {
    assert_eq!(a.len(), layout.len(), "action length");
    let (users, bs, sc) = (layout.users, layout.bs, layout.subcarriers);
    let mut radio = RadioAction::zeros(users, bs, sc);
    let per_subcarrier = cfg.max_power_per_bs / sc as f64;

    for j in 0..bs {
        for k in 0..sc {
            let logits = (0..=users).map(|u| {
                if u == users || cfg.user_bs(u) == j {
                    a[layout.subcarrier_index(j, k, u)]
                } else {
                    f64::NEG_INFINITY
                }
            });
            let winner = argmax(logits).expect("at least the off entry");
            if winner < users {
                let level = ((a[layout.power_index(winner, j, k)] + 1.0) / 2.0).clamp(0.0, 1.0);
                radio.assign(winner, j, k, level * per_subcarrier);
            }
        }
        let total = radio.bs_power(j);
        if total > cfg.max_power_per_bs {
            let mut scale = cfg.max_power_per_bs / total;
            loop {
                let mut scaled = radio.clone();
                for u in 0..users {
                    for k in 0..sc {
                        scaled.power[[u, j, k]] *= scale;
                    }
                }
                if scaled.bs_power(j) <= cfg.max_power_per_bs {
                    radio = scaled;
                    break;
                }
                scale *= 1.0 - f64::EPSILON;
            }
        }
    }

    let mut placement = Placement::new();
    for slot in &layout.slots {
        let logits = a[slot.offset..slot.offset + slot.options.len()].iter().copied();
        if let Some(i) = argmax(logits) {
            let (server, vm) = slot.options[i];
            placement.bind(slot.user, slot.position, server, vm);
        }
    }
    AllocationDecision { radio, placement }
}
