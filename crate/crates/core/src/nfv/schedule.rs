use std::cmp::Ordering;
use std::io::Write;

use super::{nf_duration, transfer_delay, NfvError, Placement};
use crate::config::NetworkConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleEntry {
    pub user: usize,
    pub position: usize,
    pub server: usize,
    pub vm: usize,
    pub start: f64,
    pub duration: f64,
}

impl ScheduleEntry {
    pub fn finish(&self) -> f64 {
        self.start + self.duration
    }
}

/// Entries in the order the scheduler dispatched them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Schedule {
    pub entries: Vec<ScheduleEntry>,
}

impl Schedule {
    pub fn get(&self, user: usize, position: usize) -> Option<&ScheduleEntry> {
        self.entries
            .iter()
            .find(|e| e.user == user && e.position == position)
    }

    /// `user,position,server,vm,start,duration` rows for Gantt charts.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "user,position,server,vm,start,duration")?;
        for e in &self.entries {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                e.user, e.position, e.server, e.vm, e.start, e.duration
            )?;
        }
        Ok(())
    }
}

/// An NF whose chain predecessor has been dispatched.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadyNf {
    pub user: usize,
    pub position: usize,
    pub vm: usize,
    /// Earliest time its input packet is available on its server.
    pub ready: f64,
    /// Time its VM becomes free.
    pub vm_free: f64,
}

/// Chooses which ready NF a list scheduler dispatches next.
pub trait OrderingPolicy {
    fn name(&self) -> &'static str;
    /// Index into `ready` (non-empty) of the NF to dispatch.
    fn select(&self, ready: &[ReadyNf]) -> usize;
}

/// Dispatch the NF whose input arrived first; ties go to the lower
/// `(user, position)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct EarliestReadyFirst;

impl OrderingPolicy for EarliestReadyFirst {
    fn name(&self) -> &'static str {
        "earliest-ready-first"
    }

    fn select(&self, ready: &[ReadyNf]) -> usize {
        ready
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                a.ready
                    .total_cmp(&b.ready)
                    .then(a.user.cmp(&b.user))
                    .then(a.position.cmp(&b.position))
            })
            .map(|(i, _)| i)
            .expect("select called with no ready NF")
    }
}

/// Non-preemptive list scheduling of every placed chain. All packets arrive
/// at time zero; an NF starts once its predecessor finished and the packet
/// crossed to its server, and once its VM is free.
///
/// Users without any binding are skipped; a partially placed chain is an error.
pub fn build_schedule(
    pl: &Placement,
    cfg: &NetworkConfig,
    policy: &dyn OrderingPolicy,
) -> Result<Schedule, NfvError> {
    let users = pl.users();
    let mut chains = Vec::with_capacity(users.len());
    for &u in &users {
        let chain: Vec<_> = (0..cfg.chain_len(u))
            .map(|m| {
                pl.get(u, m)
                    .copied()
                    .ok_or(NfvError::UnplacedNf { user: u, position: m })
            })
            .collect::<Result<_, _>>()?;
        chains.push(chain);
    }

    let mut next = vec![0usize; users.len()];
    let mut prev_finish = vec![0.0f64; users.len()];
    let mut vm_free = vec![0.0f64; cfg.vms.len()];
    let total: usize = chains.iter().map(Vec::len).sum();
    let mut sch = Schedule {
        entries: Vec::with_capacity(total),
    };
    let mut ready = Vec::with_capacity(users.len());
    let mut owner = Vec::with_capacity(users.len());

    while sch.entries.len() < total {
        ready.clear();
        owner.clear();
        for (i, chain) in chains.iter().enumerate() {
            let m = next[i];
            if m == chain.len() {
                continue;
            }
            let b = chain[m];
            let arrival = if m == 0 {
                0.0
            } else {
                let y = cfg.user_service(b.user).packet_bits;
                prev_finish[i] + transfer_delay(cfg, chain[m - 1].server, b.server, y)
            };
            ready.push(ReadyNf {
                user: b.user,
                position: m,
                vm: b.vm,
                ready: arrival,
                vm_free: vm_free[b.vm],
            });
            owner.push(i);
        }
        let pick = policy.select(&ready);
        let r = ready[pick];
        let i = owner[pick];
        let b = chains[i][r.position];
        let start = r.ready.max(r.vm_free);
        let entry = ScheduleEntry {
            user: b.user,
            position: b.position,
            server: b.server,
            vm: b.vm,
            start,
            duration: nf_duration(cfg, b.user, b.position),
        };
        vm_free[b.vm] = entry.finish();
        prev_finish[i] = entry.finish();
        next[i] += 1;
        sch.entries.push(entry);
    }
    Ok(sch)
}

/// Counts of every way a schedule can break the start-time constraint.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ScheduleAudit {
    pub vm_overlaps: usize,
    pub precedence_violations: usize,
    /// Entries whose location disagrees with the placement, duplicates, or
    /// placed NFs missing from the schedule.
    pub binding_mismatches: usize,
    pub bad_times: usize,
}

impl ScheduleAudit {
    pub fn is_clean(&self) -> bool {
        *self == Self::default()
    }
}

/// Exhaustive pairwise check, independent of how the schedule was built.
pub fn audit_schedule(sch: &Schedule, pl: &Placement, cfg: &NetworkConfig) -> ScheduleAudit {
    let mut audit = ScheduleAudit::default();
    let es = &sch.entries;

    for (i, e) in es.iter().enumerate() {
        if !(e.start >= 0.0) || !(e.duration > 0.0) {
            audit.bad_times += 1;
        } else if e.user < cfg.num_users
            && e.position < cfg.chain_len(e.user)
            && e.duration != nf_duration(cfg, e.user, e.position)
        {
            audit.bad_times += 1;
        }
        match pl.get(e.user, e.position) {
            Some(b) if b.server == e.server && b.vm == e.vm => {}
            _ => audit.binding_mismatches += 1,
        }
        if es[..i]
            .iter()
            .any(|o| o.user == e.user && o.position == e.position)
        {
            audit.binding_mismatches += 1;
        }
    }
    for b in &pl.bindings {
        if !es.iter().any(|e| e.user == b.user && e.position == b.position) {
            audit.binding_mismatches += 1;
        }
    }

    for (i, a) in es.iter().enumerate() {
        for b in &es[i + 1..] {
            if a.vm == b.vm && !(a.finish() <= b.start || b.finish() <= a.start) {
                audit.vm_overlaps += 1;
            }
            if a.user == b.user {
                let (first, second) = match a.position.cmp(&b.position) {
                    Ordering::Less => (a, b),
                    Ordering::Greater => (b, a),
                    Ordering::Equal => continue,
                };
                if second.position == first.position + 1 {
                    let y = cfg.user_service(a.user).packet_bits;
                    let earliest = first.finish() + transfer_delay(cfg, first.server, second.server, y);
                    if second.start < earliest {
                        audit.precedence_violations += 1;
                    }
                }
            }
        }
    }
    audit
}

pub fn verify_schedule(sch: &Schedule, pl: &Placement, cfg: &NetworkConfig) -> bool {
    audit_schedule(sch, pl, cfg).is_clean()
}

/// Per-user end-to-end chain delay against its deadline.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DelayReport {
    /// `None` for users with nothing scheduled.
    pub per_user: Vec<Option<f64>>,
    /// Deadline each user is held to, after any radio-delay budget.
    pub deadlines: Vec<f64>,
    pub violations: Vec<usize>,
}

impl DelayReport {
    pub fn is_violated(&self, user: usize) -> bool {
        self.violations.contains(&user)
    }
}

/// Chain delay per user: the latest `start + duration` over the user's
/// NFs, each with the transfer from its predecessor's server added.
pub fn total_delay(sch: &Schedule, pl: &Placement, cfg: &NetworkConfig) -> DelayReport {
    total_delay_with_radio(sch, pl, cfg, 0.0)
}

/// As [`total_delay`], with `radio_delay` seconds of each deadline reserved
/// for the radio segment.
pub fn total_delay_with_radio(
    sch: &Schedule,
    pl: &Placement,
    cfg: &NetworkConfig,
    radio_delay: f64,
) -> DelayReport {
    let mut per_user = vec![None; cfg.num_users];
    for e in &sch.entries {
        let incoming = if e.position == 0 {
            0.0
        } else {
            match pl.get(e.user, e.position - 1) {
                Some(prev) => {
                    let y = cfg.user_service(e.user).packet_bits;
                    transfer_delay(cfg, prev.server, e.server, y)
                }
                None => 0.0,
            }
        };
        let value = e.start + e.duration + incoming;
        let slot: &mut Option<f64> = &mut per_user[e.user];
        *slot = Some(slot.map_or(value, |d| d.max(value)));
    }
    let deadlines: Vec<f64> = (0..cfg.num_users)
        .map(|u| cfg.user_service(u).latency_max - radio_delay)
        .collect();
    let violations = per_user
        .iter()
        .enumerate()
        .filter(|(u, d)| matches!(d, Some(d) if *d > deadlines[*u]))
        .map(|(u, _)| u)
        .collect();
    DelayReport {
        per_user,
        deadlines,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ServiceSpec, VmSpec};
    use crate::nfv::tests::small_cfg;

    #[test]
    fn single_nf_starts_at_zero() {
        let cfg = small_cfg(1, 1);
        let mut pl = Placement::new();
        pl.bind(0, 0, 0, 0);
        let sch = build_schedule(&pl, &cfg, &EarliestReadyFirst).unwrap();
        assert_eq!(sch.entries.len(), 1);
        assert_eq!(sch.entries[0].start, 0.0);
        assert!(verify_schedule(&sch, &pl, &cfg));
    }

    #[test]
    fn chain_on_one_vm_runs_back_to_back() {
        let mut cfg = small_cfg(1, 1);
        cfg.services[0].chain = vec!["A".into(), "A".into()];
        let mut pl = Placement::new();
        pl.bind(0, 0, 0, 0);
        pl.bind(0, 1, 0, 0);
        let sch = build_schedule(&pl, &cfg, &EarliestReadyFirst).unwrap();
        let first = sch.get(0, 0).unwrap();
        assert_eq!(sch.get(0, 1).unwrap().start, first.duration);
    }

    #[test]
    fn two_users_share_a_vm() {
        // durations 2 s and 3 s: q = 1 bit/s with packets of 2 and 3 bits
        let mut cfg = small_cfg(1, 2);
        cfg.q_base = 1.0;
        cfg.time_unit = 10.0;
        cfg.services.push(ServiceSpec {
            name: "T".into(),
            packet_bits: 3.0,
            ..cfg.services[0].clone()
        });
        cfg.services[0].packet_bits = 2.0;
        cfg.user_requests[1].service = "T".into();
        let mut pl = Placement::new();
        pl.bind(1, 0, 0, 0);
        pl.bind(0, 0, 0, 0);
        let sch = build_schedule(&pl, &cfg, &EarliestReadyFirst).unwrap();
        assert_eq!(sch.get(0, 0).unwrap().start, 0.0);
        assert_eq!(sch.get(1, 0).unwrap().start, 2.0);
        assert!(verify_schedule(&sch, &pl, &cfg));
    }

    #[test]
    fn partial_chain_is_an_error() {
        let mut cfg = small_cfg(1, 1);
        cfg.services[0].chain = vec!["A".into(), "A".into(), "A".into()];
        let mut pl = Placement::new();
        pl.bind(0, 0, 0, 0);
        pl.bind(0, 2, 0, 0);
        assert_eq!(
            build_schedule(&pl, &cfg, &EarliestReadyFirst),
            Err(NfvError::UnplacedNf { user: 0, position: 1 })
        );
    }

    #[test]
    fn audit_catches_overlap_and_swapped_chain() {
        let mut cfg = small_cfg(2, 2);
        cfg.services[0].chain = vec!["A".into(), "A".into()];
        let mut pl = Placement::new();
        pl.bind(0, 0, 0, 0);
        pl.bind(0, 1, 1, 1);
        pl.bind(1, 0, 0, 0);
        pl.bind(1, 1, 0, 0);
        let sch = build_schedule(&pl, &cfg, &EarliestReadyFirst).unwrap();
        assert!(verify_schedule(&sch, &pl, &cfg));

        let mut overlap = sch.clone();
        let e = overlap.entries.iter_mut().find(|e| e.user == 1 && e.position == 0).unwrap();
        e.start = 0.0;
        let a = audit_schedule(&overlap, &pl, &cfg);
        assert!(a.vm_overlaps > 0, "{a:?}");

        let mut swapped = sch.clone();
        let s0 = swapped.get(0, 0).unwrap().start;
        let s1 = swapped.get(0, 1).unwrap().start;
        for e in swapped.entries.iter_mut().filter(|e| e.user == 0) {
            e.start = if e.position == 0 { s1 } else { s0 };
        }
        assert!(audit_schedule(&swapped, &pl, &cfg).precedence_violations > 0);
    }

    #[test]
    fn delay_includes_transfer_term() {
        let mut cfg = small_cfg(2, 1);
        cfg.services[0].chain = vec!["A".into(), "A".into()];
        cfg.services[0].packet_bits = 64000.0;
        cfg.q_base = 64000.0 * 100.0; // 0.01 s per NF
        let mut pl = Placement::new();
        pl.bind(0, 0, 0, 0);
        pl.bind(0, 1, 1, 1);
        let sch = build_schedule(&pl, &cfg, &EarliestReadyFirst).unwrap();
        let transfer = 64000.0 / 1e9;
        assert_eq!(transfer, 6.4e-5);
        let second = sch.get(0, 1).unwrap();
        assert_eq!(second.start, 0.01 + transfer);
        let report = total_delay(&sch, &pl, &cfg);
        assert_eq!(report.per_user[0], Some(second.finish() + transfer));
    }

    #[test]
    fn single_nf_delay_and_inclusive_deadline() {
        let mut cfg = small_cfg(1, 1);
        cfg.q_base = 100_000.0;
        let mut pl = Placement::new();
        pl.bind(0, 0, 0, 0);
        let sch = build_schedule(&pl, &cfg, &EarliestReadyFirst).unwrap();
        let report = total_delay(&sch, &pl, &cfg);
        assert_eq!(report.per_user[0], Some(0.01));
        assert!(report.violations.is_empty());

        cfg.q_base = 10_000.0;
        cfg.services[0].latency_max = 0.1;
        let sch = build_schedule(&pl, &cfg, &EarliestReadyFirst).unwrap();
        let report = total_delay(&sch, &pl, &cfg);
        assert_eq!(report.per_user[0], Some(0.1));
        assert!(report.violations.is_empty());
        let tighter = total_delay_with_radio(&sch, &pl, &cfg, 0.010);
        assert_eq!(tighter.violations, vec![0]);
    }

    #[test]
    fn unplaced_users_have_no_delay() {
        let mut cfg = small_cfg(1, 2);
        cfg.vms.push(VmSpec {
            host_server: 0,
            cpu_overhead: 0.0,
            storage_overhead: 0.0,
            capability: vec!["A".into()],
        });
        let mut pl = Placement::new();
        pl.bind(1, 0, 0, 1);
        let sch = build_schedule(&pl, &cfg, &EarliestReadyFirst).unwrap();
        let report = total_delay(&sch, &pl, &cfg);
        assert_eq!(report.per_user[0], None);
        assert!(report.per_user[1].is_some());
    }
}
