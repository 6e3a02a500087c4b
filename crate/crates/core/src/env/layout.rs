use std::ops::Range;

use crate::config::NetworkConfig;

/// One chain NF and the VMs it may be placed on.
#[derive(Debug, Clone, PartialEq)]
pub struct NfSlot {
    pub user: usize,
    pub position: usize,
    /// Capable `(server, vm)` pairs in VM order.
    pub options: Vec<(usize, usize)>,
    /// First logit of this slot in the action vector.
    pub offset: usize,
}

/// Index map of the flat action vector:
/// `[power U*J*K | subcarrier J*K*(U+1) | placement logits per chain NF]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionLayout {
    pub users: usize,
    pub bs: usize,
    pub subcarriers: usize,
    pub power: Range<usize>,
    pub subcarrier: Range<usize>,
    pub placement: Range<usize>,
    pub slots: Vec<NfSlot>,
}

impl ActionLayout {
    pub fn new(cfg: &NetworkConfig) -> Self {
        let (u, j, k) = (cfg.num_users, cfg.num_bs, cfg.num_subcarriers);
        let power = 0..u * j * k;
        let subcarrier = power.end..power.end + j * k * (u + 1);
        let mut offset = subcarrier.end;
        let mut slots = Vec::new();
        for user in 0..u {
            for position in 0..cfg.chain_len(user) {
                let options = cfg.capable_vms(cfg.nf_name(user, position));
                let len = options.len();
                slots.push(NfSlot {
                    user,
                    position,
                    options,
                    offset,
                });
                offset += len;
            }
        }
        Self {
            users: u,
            bs: j,
            subcarriers: k,
            placement: subcarrier.end..offset,
            power,
            subcarrier,
            slots,
        }
    }

    pub fn len(&self) -> usize {
        self.placement.end
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Power and subcarrier logits.
    pub fn radio(&self) -> Range<usize> {
        0..self.subcarrier.end
    }

    pub fn core(&self) -> Range<usize> {
        self.placement.clone()
    }

    pub fn power_index(&self, u: usize, j: usize, k: usize) -> usize {
        self.power.start + (u * self.bs + j) * self.subcarriers + k
    }

    /// Logit of user `u` (or "off" when `u == users`) for subcarrier `k` of BS `j`.
    pub fn subcarrier_index(&self, j: usize, k: usize, u: usize) -> usize {
        self.subcarrier.start + (j * self.subcarriers + k) * (self.users + 1) + u
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lengths_add_up() {
        let cfg = NetworkConfig::default();
        let l = ActionLayout::new(&cfg);
        assert_eq!(l.power.len(), 8 * 4 * 10);
        assert_eq!(l.subcarrier.len(), 4 * 10 * 9);
        let nfs: usize = (0..8).map(|u| cfg.chain_len(u)).sum();
        assert_eq!(l.slots.len(), nfs);
        assert_eq!(l.placement.len(), nfs * cfg.vms.len());
        assert_eq!(l.radio().end + l.core().len(), l.len());
    }
}
