use crate::config::NetworkConfig;
use crate::radio::{sample_channel, ChannelState};

const FIT_DRAWS: u64 = 1000;
const FIT_SEED: u64 = 0x6a09_e667;
const MIN_GAIN: f64 = 1e-300;

/// Maps gains to `(log10(g) - mean) / std`, with the moments estimated once
/// per config from a fixed set of channel draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateNormalizer {
    pub mean: f64,
    pub std: f64,
}

impl StateNormalizer {
    pub fn fit(cfg: &NetworkConfig) -> Self {
        let mut n = 0.0;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for i in 0..FIT_DRAWS {
            let ch = sample_channel(cfg, FIT_SEED.wrapping_add(i));
            for &g in &ch.gains {
                let x = g.max(MIN_GAIN).log10();
                n += 1.0;
                sum += x;
                sq += x * x;
            }
        }
        if n == 0.0 {
            return Self { mean: 0.0, std: 1.0 };
        }
        let mean = sum / n;
        let var = (sq / n - mean * mean).max(0.0);
        let std = if var > 0.0 { var.sqrt() } else { 1.0 };
        Self { mean, std }
    }

    pub fn normalize(&self, ch: &ChannelState) -> Vec<f64> {
        ch.gains
            .iter()
            .map(|&g| (g.max(MIN_GAIN).log10() - self.mean) / self.std)
            .collect()
    }
}
