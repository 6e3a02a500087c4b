//! Weighted total energy, energy efficiency and the MDP reward.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ObjectiveError {
    #[error("energy efficiency is undefined for non-positive energy {0}")]
    ZeroEnergy(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EnergyBreakdown {
    pub radio: f64,
    pub cpu: f64,
    /// `mu1 * radio + mu2 * cpu`
    pub total_weighted: f64,
}

pub fn total_energy(radio: f64, cpu: f64, mu1: f64, mu2: f64) -> EnergyBreakdown {
    EnergyBreakdown {
        radio,
        cpu,
        total_weighted: mu1 * radio + mu2 * cpu,
    }
}

/// Sum rate per unit of weighted energy.
pub fn energy_efficiency(sum_rate: f64, energy: &EnergyBreakdown) -> Result<f64, ObjectiveError> {
    if !(energy.total_weighted > 0.0) {
        return Err(ObjectiveError::ZeroEnergy(energy.total_weighted));
    }
    Ok(sum_rate / energy.total_weighted)
}

pub fn reward(sum_rate: f64, energy: &EnergyBreakdown, c: f64) -> Result<f64, ObjectiveError> {
    Ok(c * energy_efficiency(sum_rate, energy)?)
}
