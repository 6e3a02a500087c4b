use std::io::Write;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::Evaluation;
use crate::objective::EnergyBreakdown;

/// One JSON line per environment step.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRecord {
    pub step: usize,
    pub state_digest: String,
    pub reward: f64,
    pub energy_efficiency: f64,
    pub admitted: usize,
    pub dropped: Vec<usize>,
    pub energy: EnergyBreakdown,
    pub cpu_active: f64,
    pub cpu_idle: f64,
    pub delays: Vec<Option<f64>>,
}

impl TraceRecord {
    pub fn new(step: usize, state: &[f64], ev: &Evaluation) -> Self {
        Self {
            step,
            state_digest: state_digest(state),
            reward: ev.reward,
            energy_efficiency: ev.energy_efficiency,
            admitted: ev.admitted.len(),
            dropped: ev.dropped.clone(),
            energy: ev.energy,
            cpu_active: ev.cpu.active,
            cpu_idle: ev.cpu.idle,
            delays: ev.delays.per_user.clone(),
        }
    }
}

/// First 16 hex digits of the SHA-256 of the state's little-endian bytes.
pub fn state_digest(state: &[f64]) -> String {
    let mut h = Sha256::new();
    for x in state {
        h.update(x.to_le_bytes());
    }
    h.finalize()[..8]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub struct TraceWriter {
    out: Box<dyn Write + Send>,
}

impl TraceWriter {
    pub fn new(out: Box<dyn Write + Send>) -> Self {
        Self { out }
    }

    pub fn write(&mut self, record: &TraceRecord) -> std::io::Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")
    }

    pub fn flush(&mut self) -> std::io::Result<()> {
        self.out.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_stable() {
        assert_eq!(state_digest(&[1.0, 2.0]), state_digest(&[1.0, 2.0]));
        assert_ne!(state_digest(&[1.0, 2.0]), state_digest(&[2.0, 1.0]));
        assert_eq!(state_digest(&[]).len(), 16);
    }
}
