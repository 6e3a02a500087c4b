//! Downlink OFDMA model: channel sampling, SINR, achievable rate, radio energy
//! and the subcarrier/power/rate constraints.

use std::io::{BufRead, Write};

use ndarray::{Array3, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use thiserror::Error;

use crate::config::NetworkConfig;

#[derive(Debug, Error)]
pub enum ChannelIoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Linear power gains `h[u, j, k]` plus the user drop that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    pub gains: Array3<f64>,
    pub user_positions: Vec<(f64, f64)>,
}

impl ChannelState {
    pub fn num_users(&self) -> usize {
        self.gains.dim().0
    }

    pub fn num_bs(&self) -> usize {
        self.gains.dim().1
    }

    pub fn num_subcarriers(&self) -> usize {
        self.gains.dim().2
    }

    /// Writes `u,j,k,gain` rows. Positions are not exported.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "u,j,k,gain")?;
        for ((u, j, k), g) in self.gains.indexed_iter() {
            writeln!(w, "{u},{j},{k},{g:e}")?;
        }
        Ok(())
    }

    /// Reads the `u,j,k,gain` format back. Dimensions are inferred from the
    /// largest indices; missing cells are an error.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self, ChannelIoError> {
        let mut rows = Vec::new();
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            if idx == 0 || line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = |message: String| ChannelIoError::Parse {
                line: lineno,
                message,
            };
            if fields.len() != 4 {
                return Err(bad(format!("expected 4 fields, found {}", fields.len())));
            }
            let ix = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("bad index {s:?}")));
            let g: f64 = fields[3]
                .parse()
                .map_err(|_| bad(format!("bad gain {:?}", fields[3])))?;
            if !(g >= 0.0) {
                return Err(bad(format!("negative gain {g}")));
            }
            rows.push((ix(fields[0])?, ix(fields[1])?, ix(fields[2])?, g));
        }
        let dim = rows.iter().fold((0, 0, 0), |d, r| {
            (d.0.max(r.0 + 1), d.1.max(r.1 + 1), d.2.max(r.2 + 1))
        });
        if rows.len() != dim.0 * dim.1 * dim.2 {
            return Err(ChannelIoError::Parse {
                line: 0,
                message: format!("{} rows for a {dim:?} matrix", rows.len()),
            });
        }
        let mut gains = Array3::from_elem(dim, f64::NAN);
        for (u, j, k, g) in rows {
            gains[[u, j, k]] = g;
        }
        if gains.iter().any(|g| g.is_nan()) {
            return Err(ChannelIoError::Parse {
                line: 0,
                message: "duplicate or missing cells".into(),
            });
        }
        Ok(Self {
            gains,
            user_positions: Vec::new(),
        })
    }
}

/// Subcarrier assignment and transmit power, both indexed `[u, j, k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadioAction {
    pub rho: Array3<bool>,
    pub power: Array3<f64>,
}

impl RadioAction {
    pub fn zeros(users: usize, bs: usize, subcarriers: usize) -> Self {
        Self {
            rho: Array3::from_elem((users, bs, subcarriers), false),
            power: Array3::zeros((users, bs, subcarriers)),
        }
    }

    pub fn for_config(cfg: &NetworkConfig) -> Self {
        Self::zeros(cfg.num_users, cfg.num_bs, cfg.num_subcarriers)
    }

    pub fn assign(&mut self, u: usize, j: usize, k: usize, power: f64) {
        self.rho[[u, j, k]] = true;
        self.power[[u, j, k]] = power;
    }

    /// Power actually radiated, `rho * p`.
    pub fn effective_power(&self, u: usize, j: usize, k: usize) -> f64 {
        if self.rho[[u, j, k]] {
            self.power[[u, j, k]]
        } else {
            0.0
        }
    }

    /// Total power BS `j` radiates on subcarrier `k`.
    pub fn bs_subcarrier_power(&self, j: usize, k: usize) -> f64 {
        (0..self.rho.dim().0)
            .map(|u| self.effective_power(u, j, k))
            .sum()
    }

    pub fn bs_power(&self, j: usize) -> f64 {
        (0..self.rho.dim().2)
            .map(|k| self.bs_subcarrier_power(j, k))
            .sum()
    }

    /// Removes every allocation of user `u`.
    pub fn clear_user(&mut self, u: usize) {
        self.rho
            .index_axis_mut(ndarray::Axis(0), u)
            .fill(false);
        self.power
            .index_axis_mut(ndarray::Axis(0), u)
            .fill(0.0);
    }

    /// `power == 0` wherever `rho == 0`.
    pub fn is_consistent(&self) -> bool {
        Zip::from(&self.rho)
            .and(&self.power)
            .all(|&r, &p| p >= 0.0 && (r || p == 0.0))
    }
}

/// BS sites on a regular grid covering the square area.
pub fn bs_positions(cfg: &NetworkConfig) -> Vec<(f64, f64)> {
    let j = cfg.num_bs;
    let cols = (j as f64).sqrt().ceil().max(1.0) as usize;
    let rows = j.div_ceil(cols);
    let dx = cfg.area_side / cols as f64;
    let dy = cfg.area_side / rows as f64;
    (0..j)
        .map(|i| {
            let (c, r) = (i % cols, i / cols);
            ((c as f64 + 0.5) * dx, (r as f64 + 0.5) * dy)
        })
        .collect()
}

/// Average linear gain at distance `meters` (no fading).
pub fn path_gain(cfg: &NetworkConfig, meters: f64) -> f64 {
    let d_km = meters.max(cfg.min_distance) / 1000.0;
    let loss_db = cfg.path_loss_intercept + cfg.path_loss_slope * d_km.log10();
    10f64.powf(-loss_db / 10.0)
}

/// Drops users uniformly in the area and draws path loss times Rayleigh
/// (unit-mean exponential power) fading for every `(u, j, k)`.
pub fn sample_channel(cfg: &NetworkConfig, seed: u64) -> ChannelState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let user_positions: Vec<(f64, f64)> = (0..cfg.num_users)
        .map(|_| {
            (
                rng.random::<f64>() * cfg.area_side,
                rng.random::<f64>() * cfg.area_side,
            )
        })
        .collect();
    sample_fading(cfg, user_positions, &mut rng)
}

/// Fresh fading for users at fixed positions.
pub fn sample_fading<R: Rng + ?Sized>(
    cfg: &NetworkConfig,
    user_positions: Vec<(f64, f64)>,
    rng: &mut R,
) -> ChannelState {
    let sites = bs_positions(cfg);
    let mut gains = Array3::zeros((user_positions.len(), cfg.num_bs, cfg.num_subcarriers));
    for (u, &(ux, uy)) in user_positions.iter().enumerate() {
        for (j, &(bx, by)) in sites.iter().enumerate() {
            let mean = path_gain(cfg, (ux - bx).hypot(uy - by));
            for k in 0..cfg.num_subcarriers {
                let fading: f64 = rng.sample(Exp1);
                gains[[u, j, k]] = mean * fading;
            }
        }
    }
    ChannelState {
        gains,
        user_positions,
    }
}

/// Interference seen by user `u` of BS `j` on subcarrier `k` from every
/// other BS transmitting on `k`.
pub fn interference(ch: &ChannelState, act: &RadioAction, u: usize, j: usize, k: usize) -> f64 {
    (0..ch.num_bs())
        .filter(|&other| other != j)
        .map(|other| ch.gains[[u, other, k]] * act.bs_subcarrier_power(other, k))
        .sum()
}

pub fn sinr(ch: &ChannelState, act: &RadioAction, u: usize, j: usize, k: usize, noise: f64) -> f64 {
    let p = act.power[[u, j, k]];
    if p == 0.0 {
        return 0.0;
    }
    p * ch.gains[[u, j, k]] / (noise + interference(ch, act, u, j, k))
}

/// Achievable spectral efficiency in bits/s/Hz (base-2 logarithm).
pub fn rate_per_subcarrier(
    ch: &ChannelState,
    act: &RadioAction,
    u: usize,
    j: usize,
    k: usize,
    noise: f64,
) -> f64 {
    if !act.rho[[u, j, k]] {
        return 0.0;
    }
    (1.0 + sinr(ch, act, u, j, k, noise)).log2()
}

/// Per-user rate summed over every BS and subcarrier.
pub fn user_rates(cfg: &NetworkConfig, ch: &ChannelState, act: &RadioAction) -> Vec<f64> {
    let noise = cfg.noise_power();
    let (users, bs, sc) = act.rho.dim();
    (0..users)
        .map(|u| {
            let mut total = 0.0;
            for j in 0..bs {
                for k in 0..sc {
                    total += rate_per_subcarrier(ch, act, u, j, k, noise);
                }
            }
            total
        })
        .collect()
}

/// Transmit energy over one time unit plus an optional per-BS circuit term.
pub fn radio_energy(act: &RadioAction, time_unit: f64) -> f64 {
    radio_energy_with_circuit(act, time_unit, 0.0)
}

pub fn radio_energy_with_circuit(act: &RadioAction, time_unit: f64, circuit_per_bs: f64) -> f64 {
    let radiated: f64 = Zip::from(&act.rho)
        .and(&act.power)
        .fold(0.0, |acc, &r, &p| if r { acc + p } else { acc });
    let bs = act.rho.dim().1 as f64;
    time_unit * (radiated + bs * circuit_per_bs)
}

/// Energy attributable to one user's own allocations.
pub fn user_radio_energy(act: &RadioAction, u: usize, time_unit: f64) -> f64 {
    let (_, bs, sc) = act.rho.dim();
    let mut total = 0.0;
    for j in 0..bs {
        for k in 0..sc {
            total += act.effective_power(u, j, k);
        }
    }
    time_unit * total
}

/// Each subcarrier of each BS serves at most one user.
pub fn check_c1(act: &RadioAction) -> bool {
    let (users, bs, sc) = act.rho.dim();
    (0..bs).all(|j| (0..sc).all(|k| (0..users).filter(|&u| act.rho[[u, j, k]]).count() <= 1))
}

/// Per-BS transmit power budget, boundary inclusive.
pub fn check_c2(act: &RadioAction, cfg: &NetworkConfig) -> bool {
    (0..act.rho.dim().1).all(|j| act.bs_power(j) <= cfg.max_power_per_bs)
}

/// Every user reaches the minimum rate of its requested service.
pub fn check_c3(rates: &[f64], cfg: &NetworkConfig) -> bool {
    rates
        .iter()
        .enumerate()
        .all(|(u, &r)| r >= cfg.user_service(u).rate_min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_bs_cfg(users: usize, sc: usize) -> NetworkConfig {
        let mut cfg = NetworkConfig::default();
        cfg.num_bs = 1;
        cfg.num_subcarriers = sc;
        cfg.with_users(users)
    }

    fn flat_channel(users: usize, bs: usize, sc: usize, g: f64) -> ChannelState {
        ChannelState {
            gains: Array3::from_elem((users, bs, sc), g),
            user_positions: vec![(0.0, 0.0); users],
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let cfg = NetworkConfig::default();
        assert_eq!(sample_channel(&cfg, 11), sample_channel(&cfg, 11));
        assert_ne!(sample_channel(&cfg, 11), sample_channel(&cfg, 12));
    }

    #[test]
    fn path_gain_decreases_with_distance() {
        let cfg = NetworkConfig::default();
        assert!(path_gain(&cfg, 100.0) > path_gain(&cfg, 400.0));
        // 128.1 dB at 1 km
        assert!((path_gain(&cfg, 1000.0) - 10f64.powf(-12.81)).abs() < 1e-25);
    }

    #[test]
    fn no_interference_with_one_bs() {
        let ch = flat_channel(2, 1, 3, 1.0);
        let mut act = RadioAction::zeros(2, 1, 3);
        act.assign(0, 0, 0, 5.0);
        act.assign(1, 0, 1, 5.0);
        for u in 0..2 {
            for k in 0..3 {
                assert_eq!(interference(&ch, &act, u, 0, k), 0.0);
            }
        }
    }

    #[test]
    fn interference_from_neighbour() {
        let mut ch = flat_channel(2, 2, 1, 1.0);
        ch.gains[[0, 1, 0]] = 0.5;
        let mut act = RadioAction::zeros(2, 2, 1);
        assert_eq!(interference(&ch, &act, 0, 0, 0), 0.0);
        act.assign(1, 1, 0, 2.0);
        assert_eq!(interference(&ch, &act, 0, 0, 0), 1.0);
    }

    #[test]
    fn sinr_cases() {
        let mut ch = flat_channel(1, 1, 1, 1.0);
        let mut act = RadioAction::zeros(1, 1, 1);
        assert_eq!(sinr(&ch, &act, 0, 0, 0, 1.0), 0.0);
        act.assign(0, 0, 0, 1.0);
        assert_eq!(sinr(&ch, &act, 0, 0, 0, 1.0), 1.0);

        // p = 2, h = 0.3, noise 0.1, interference 0.2 from a second BS
        ch = flat_channel(2, 2, 1, 0.0);
        ch.gains[[0, 0, 0]] = 0.3;
        ch.gains[[0, 1, 0]] = 0.2;
        let mut act = RadioAction::zeros(2, 2, 1);
        act.assign(0, 0, 0, 2.0);
        act.assign(1, 1, 0, 1.0);
        assert!((sinr(&ch, &act, 0, 0, 0, 0.1) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rate_values() {
        let ch = flat_channel(1, 1, 1, 1.0);
        let mut act = RadioAction::zeros(1, 1, 1);
        assert_eq!(rate_per_subcarrier(&ch, &act, 0, 0, 0, 1.0), 0.0);
        act.assign(0, 0, 0, 1.0);
        assert_eq!(rate_per_subcarrier(&ch, &act, 0, 0, 0, 1.0), 1.0);
        act.power[[0, 0, 0]] = 3.0;
        assert_eq!(rate_per_subcarrier(&ch, &act, 0, 0, 0, 1.0), 2.0);
    }

    #[test]
    fn energy_cases() {
        let mut act = RadioAction::zeros(2, 1, 2);
        assert_eq!(radio_energy(&act, 1.0), 0.0);
        act.assign(0, 0, 0, 40.0);
        assert_eq!(radio_energy(&act, 1.0), 40.0);
        act.assign(1, 0, 1, 3.0);
        let doubled = RadioAction {
            rho: act.rho.clone(),
            power: act.power.mapv(|p| 2.0 * p),
        };
        assert_eq!(radio_energy(&doubled, 1.0), 2.0 * radio_energy(&act, 1.0));
        assert_eq!(radio_energy_with_circuit(&act, 2.0, 1.5), 2.0 * (43.0 + 1.5));
    }

    #[test]
    fn constraint_checks() {
        let cfg = single_bs_cfg(2, 2);
        let mut act = RadioAction::for_config(&cfg);
        act.assign(0, 0, 0, 20.0);
        act.assign(1, 0, 0, 20.0);
        assert!(!check_c1(&act));
        act.rho[[1, 0, 0]] = false;
        act.power[[1, 0, 0]] = 0.0;
        act.assign(1, 0, 1, 20.0);
        assert!(check_c1(&act));
        // exactly 40 W on a 40 W budget
        assert!(check_c2(&act, &cfg));
        act.power[[1, 0, 1]] = 20.5;
        assert!(!check_c2(&act, &cfg));

        let empty = RadioAction::for_config(&cfg);
        let rates = user_rates(&cfg, &flat_channel(2, 1, 2, 1.0), &empty);
        assert!(!check_c3(&rates, &cfg));
    }

    #[test]
    fn csv_round_trip() {
        let cfg = single_bs_cfg(3, 2);
        let ch = sample_channel(&cfg, 5);
        let mut buf = Vec::new();
        ch.write_csv(&mut buf).unwrap();
        let back = ChannelState::read_csv(&buf[..]).unwrap();
        assert_eq!(back.gains, ch.gains);
    }
}
