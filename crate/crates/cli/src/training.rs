use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;

use jrnra_agents::{CurveRow, Registry, TrainReport, TrainSettings};
use jrnra_core::NetworkConfig;

pub fn write_curve<W: Write>(rows: &[CurveRow], w: W) -> anyhow::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

/// Paths written by [`run_training`].
#[derive(Debug, Clone)]
pub struct TrainingOutput {
    pub report: TrainReport,
    pub curve: PathBuf,
}

/// Trains `method` and writes `<out>/<method>_seed<seed>.csv` plus any
/// checkpoints under `<out>/checkpoints/seed<seed>/`.
pub fn run_training(
    cfg: &NetworkConfig,
    registry: &Registry,
    method: &str,
    seed: u64,
    episodes: usize,
    out: &Path,
) -> anyhow::Result<TrainingOutput> {
    let trainer = registry.get(method)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let settings = TrainSettings {
        checkpoint_dir: Some(out.join("checkpoints").join(format!("seed{seed}"))),
        ..TrainSettings::new(episodes, seed)
    };
    let report = trainer
        .train(cfg, &settings)
        .with_context(|| format!("training {method} with seed {seed}"))?;
    let curve = out.join(format!("{method}_seed{seed}.csv"));
    write_curve(&report.curve, File::create(&curve)?)?;
    Ok(TrainingOutput { report, curve })
}

#[cfg(test)]
mod tests {
    use super::*;
    use jrnra_core::scenarios::tiny_learning;

    #[test]
    fn header_and_empty_losses() {
        let rows = vec![CurveRow {
            episode: 0,
            mean_reward: 1.5,
            critic_loss: None,
            actor_loss: Some(-0.25),
            admitted_users: 2.0,
        }];
        let mut buf = Vec::new();
        write_curve(&rows, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "episode,mean_reward,critic_loss,actor_loss,admitted_users\n0,1.5,,-0.25,2.0\n"
        );
    }

    #[test]
    fn random_training_writes_no_checkpoints() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_learning();
        cfg.learning.eval_episodes = 1;
        let out = run_training(&cfg, &Registry::with_defaults(), "random", 1, 3, dir.path()).unwrap();
        assert!(out.report.checkpoints.is_empty());
        assert!(!dir.path().join("checkpoints").join("seed1").exists());
        let text = fs::read_to_string(out.curve).unwrap();
        assert_eq!(text.lines().count(), 4);
    }
}
