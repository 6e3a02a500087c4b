use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use jrnra_agents::Registry;
use jrnra_core::config::{parse_config, to_config_string, validate_config};
use jrnra_core::env::TraceWriter;
use jrnra_core::oracle::{describe, enumerate_best, verify_env, EnvEvaluator, TinyInstance};
use jrnra_core::radio::sample_channel;
use jrnra_core::{scenarios, NetworkConfig};

use crate::manifest::Manifest;
use crate::overhead::{signaling_overhead, OVERHEAD_METHODS};
use crate::simulate::{simulate, write_steps};
use crate::sweep::{median_ee, run_sweep, write_rows, SweepSpec, SweepVariable};
use crate::training::run_training;

#[derive(Debug, Parser)]
#[command(name = "jrnra", version, about = "Joint radio and NFV-core allocation experiments")]
pub struct Cli {
    /// Configuration file; defaults to the preset.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// builtin, tiny or reference
    #[arg(long, global = true, default_value = "builtin")]
    pub preset: String,
    /// Repeat the run recorded in this manifest.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Roll out uniform random actions and log every step.
    Simulate(SimulateArgs),
    /// Train one method and write its learning curve.
    Train(TrainArgs),
    /// Sweep one parameter over methods and seeds.
    Sweep(SweepArgs),
    /// Exhaustive optimum and environment cross-check on a tiny instance.
    Oracle(OracleArgs),
    /// Signalling payload per decision for each method.
    Overhead(OverheadArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub episodes: usize,
    #[arg(long, default_value = "simulate.csv")]
    pub out: PathBuf,
    /// JSON-lines trace of every step.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub method: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub episodes: usize,
    /// Output directory.
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// num_users, rate_min, latency_max or mu2
    #[arg(long)]
    pub variable: String,
    #[arg(long, value_delimiter = ',')]
    pub values: Vec<f64>,
    #[arg(long = "method", value_delimiter = ',', default_value = "sac")]
    pub methods: Vec<String>,
    #[arg(long = "seed", value_delimiter = ',', default_value = "0,1,2,3,4")]
    pub seeds: Vec<u64>,
    #[arg(long, default_value_t = 200)]
    pub episodes: usize,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, default_value = "sweep.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, default_value_t = scenarios::REFERENCE_SEED)]
    pub seed: u64,
    /// Random grid decisions to cross-check against the environment.
    #[arg(long, default_value_t = 0)]
    pub verify: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OverheadArgs {
    /// Defaults to every method with a signalling model.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn preset(name: &str) -> anyhow::Result<NetworkConfig> {
    Ok(match name {
        "builtin" => scenarios::builtin(),
        "tiny" => scenarios::tiny_learning(),
        "reference" => scenarios::tiny_reference(),
        other => bail!("unknown preset `{other}` (builtin, tiny, reference)"),
    })
}

fn load(cli: &Cli) -> anyhow::Result<(NetworkConfig, String)> {
    let cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_config(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => preset(&cli.preset)?,
    };
    let problems = validate_config(&cfg);
    if !problems.is_empty() {
        let list: Vec<String> = problems.iter().map(|v| format!("{v:?}")).collect();
        bail!("invalid configuration:\n  {}", list.join("\n  "));
    }
    let text = to_config_string(&cfg);
    Ok((cfg, text))
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

/// Parses `args` (without the program name) and runs the command.
pub fn run_args(args: &[String]) -> anyhow::Result<()> {
    let mut argv = vec!["jrnra".to_string()];
    argv.extend_from_slice(args);
    let cli = Cli::try_parse_from(&argv)?;
    if let Some(path) = &cli.manifest {
        return replay(path, cli.command.is_some());
    }
    let (cfg, text) = load(&cli)?;
    execute(&cli, &cfg, &text, args)
}

fn replay(path: &Path, extra_command: bool) -> anyhow::Result<()> {
    anyhow::ensure!(!extra_command, "--manifest replays a recorded run and takes no subcommand");
    let m = Manifest::load(path)?;
    let mut argv = vec!["jrnra".to_string()];
    argv.extend(m.args.iter().cloned());
    let cli = Cli::try_parse_from(&argv).context("manifest arguments no longer parse")?;
    let cfg = parse_config(&m.config)?;
    execute(&cli, &cfg, &m.config, &m.args)
}

fn execute(cli: &Cli, cfg: &NetworkConfig, text: &str, args: &[String]) -> anyhow::Result<()> {
    let Some(command) = &cli.command else {
        bail!("no subcommand given; try --help");
    };
    let registry = Registry::with_defaults();
    let mut manifest = Manifest::new(args, text);
    match command {
        Command::Simulate(a) => {
            let trace = match &a.trace {
                Some(p) => Some(TraceWriter::new(Box::new(BufWriter::new(
                    File::create(p).with_context(|| format!("creating {}", p.display()))?,
                )))),
                None => None,
            };
            let rows = simulate(cfg, a.seed, a.episodes, trace)?;
            write_steps(&rows, File::create(&a.out)?)?;
            manifest.seeds = vec![a.seed];
            manifest.episodes = Some(a.episodes);
            manifest.outputs = vec![a.out.clone()];
            manifest.outputs.extend(a.trace.clone());
            manifest.write_beside(&a.out)?;
            eprintln!("wrote {} steps to {}", rows.len(), a.out.display());
        }
        Command::Train(a) => {
            let out = run_training(cfg, &registry, &a.method, a.seed, a.episodes, &a.out)?;
            manifest.seeds = vec![a.seed];
            manifest.methods = vec![a.method.clone()];
            manifest.episodes = Some(a.episodes);
            manifest.outputs = vec![out.curve.clone()];
            manifest.outputs.extend(out.report.checkpoints.iter().cloned());
            manifest.write_beside(&out.curve)?;
            println!(
                "{} seed {}: final EE {:.6}, last-50 reward {:.6} -> {}",
                a.method,
                a.seed,
                out.report.final_ee,
                out.report.tail_reward(50),
                out.curve.display()
            );
        }
        Command::Sweep(a) => {
            let variable: SweepVariable = a.variable.parse()?;
            let values = if a.values.is_empty() {
                variable.default_values(cfg)
            } else {
                a.values.clone()
            };
            let spec = SweepSpec {
                variable,
                values,
                methods: a.methods.clone(),
                seeds: a.seeds.clone(),
                episodes: a.episodes,
            };
            let rows = run_sweep(cfg, &spec, &registry, a.jobs)?;
            write_rows(&rows, File::create(&a.out)?)?;
            manifest.seeds = spec.seeds.clone();
            manifest.methods = spec.methods.clone();
            manifest.episodes = Some(spec.episodes);
            manifest.outputs = vec![a.out.clone()];
            manifest.write_beside(&a.out)?;
            for r in rows.iter().filter(|r| r.error.is_some()) {
                eprintln!(
                    "failed: {}={} {} seed {}: {}",
                    variable,
                    r.value,
                    r.method,
                    r.seed,
                    r.error.as_deref().unwrap_or_default()
                );
            }
            for m in &spec.methods {
                for (v, ee) in median_ee(&rows, m, &spec.values) {
                    println!("{m} {variable}={v}: median final EE {ee:.6}");
                }
            }
        }
        Command::Oracle(a) => {
            let inst = TinyInstance::new(cfg.clone())?;
            let ch = sample_channel(cfg, a.seed);
            let best = enumerate_best(&inst, &ch)?;
            let mut report = serde_json::json!({
                "seed": a.seed,
                "best_ee": best.best_ee,
                "index": best.index.to_string(),
                "visited": best.visited.to_string(),
                "decision": describe(&jrnra_core::env::ActionLayout::new(cfg), &best.decision),
            });
            if a.verify > 0 {
                let v = verify_env(&inst, &ch, a.verify, a.seed, &EnvEvaluator);
                report["verify"] = serde_json::json!({
                    "samples": v.samples,
                    "mismatches": v.mismatches.len(),
                    "max_relative_error": v.max_relative_error,
                });
            }
            let mut w = output(a.out.as_deref())?;
            writeln!(w, "{}", serde_json::to_string_pretty(&report)?)?;
            w.flush()?;
            if let Some(p) = &a.out {
                manifest.seeds = vec![a.seed];
                manifest.outputs = vec![p.clone()];
                manifest.write_beside(p)?;
            }
        }
        Command::Overhead(a) => {
            let methods: Vec<&str> = match &a.method {
                Some(m) => vec![m.as_str()],
                None => OVERHEAD_METHODS.to_vec(),
            };
            let mut w = csv::Writer::from_writer(output(a.out.as_deref())?);
            w.write_record(["method", "orchestrator_radio", "orchestrator_core", "requested_rate", "total"])?;
            for m in methods {
                let o = signaling_overhead(cfg, m)?;
                w.write_record([
                    o.method.clone(),
                    o.orchestrator_radio.to_string(),
                    o.orchestrator_core.to_string(),
                    o.requested_rate.to_string(),
                    o.total().to_string(),
                ])?;
            }
            w.flush()?;
            if let Some(p) = &a.out {
                manifest.methods = a.method.iter().cloned().collect();
                manifest.outputs = vec![p.clone()];
                manifest.write_beside(p)?;
            }
        }
    }
    Ok(())
}
