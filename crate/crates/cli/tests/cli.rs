use std::fs;
use std::path::Path;

use jrnra::app::{preset, run_args};
use jrnra_core::config::load_config;

fn args(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn shipped_configs_match_presets() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["builtin", "tiny", "reference"] {
        let cfg = load_config(root.join(format!("{name}.cfg"))).unwrap();
        assert_eq!(cfg, preset(name).unwrap(), "{name}");
    }
}

#[test]
fn training_is_byte_identical_and_replayable() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        run_args(&args(&["train", "--preset", "tiny", "--method", "sac", "--episodes", "10", "--seed", "3", "--out", path(out)]))
            .unwrap();
    }
    let curve_a = fs::read(a.join("sac_seed3.csv")).unwrap();
    assert_eq!(curve_a, fs::read(b.join("sac_seed3.csv")).unwrap());
    assert_eq!(String::from_utf8(curve_a.clone()).unwrap().lines().count(), 11);
    assert_eq!(fs::read_dir(a.join("checkpoints/seed3")).unwrap().count(), 3);

    let manifest = a.join("sac_seed3.csv.manifest.json");
    fs::remove_file(a.join("sac_seed3.csv")).unwrap();
    run_args(&args(&["--manifest", path(&manifest)])).unwrap();
    assert_eq!(fs::read(a.join("sac_seed3.csv")).unwrap(), curve_a);
}

#[test]
fn random_method_writes_no_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    run_args(&args(&["train", "--preset", "tiny", "--method", "random", "--episodes", "3", "--out", path(dir.path())])).unwrap();
    assert!(dir.path().join("random_seed0.csv").exists());
    assert!(!dir.path().join("checkpoints/seed0").exists());
}

#[test]
fn sweep_and_simulate_write_csv_with_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = dir.path().join("sweep.csv");
    run_args(&args(&[
        "sweep", "--preset", "tiny", "--variable", "rate_min", "--values", "4,8", "--method", "random,ddpg", "--seed",
        "0,1", "--episodes", "2", "--jobs", "2", "--out", path(&sweep),
    ]))
    .unwrap();
    let text = fs::read_to_string(&sweep).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 2 * 2);
    assert!(dir.path().join("sweep.csv.manifest.json").exists());

    let sim = dir.path().join("sim.csv");
    let trace = dir.path().join("trace.jsonl");
    run_args(&args(&["simulate", "--preset", "tiny", "--episodes", "2", "--out", path(&sim), "--trace", path(&trace)])).unwrap();
    assert_eq!(fs::read_to_string(&sim).unwrap().lines().count(), 21);
    assert_eq!(fs::read_to_string(&trace).unwrap().lines().count(), 20);
}

#[test]
fn oracle_and_overhead_commands() {
    let dir = tempfile::tempdir().unwrap();
    let oracle = dir.path().join("oracle.json");
    run_args(&args(&["oracle", "--preset", "reference", "--verify", "50", "--out", path(&oracle)])).unwrap();
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&oracle).unwrap()).unwrap();
    assert_eq!(v["verify"]["mismatches"], 0);
    assert!(v["best_ee"].as_f64().unwrap() > 0.0);

    let overhead = dir.path().join("overhead.csv");
    run_args(&args(&["overhead", "--preset", "tiny", "--out", path(&overhead)])).unwrap();
    let text = fs::read_to_string(&overhead).unwrap();
    assert_eq!(text.lines().next().unwrap(), "method,orchestrator_radio,orchestrator_core,requested_rate,total");
    assert!(text.contains("sac,144,144,16,304"));
}

#[test]
fn bad_inputs_are_errors() {
    assert!(run_args(&args(&["train", "--preset", "tiny", "--method", "ppo"])).is_err());
    assert!(run_args(&args(&["train", "--preset", "nowhere", "--method", "sac"])).is_err());
    assert!(run_args(&args(&["oracle", "--preset", "builtin"])).is_err());
    assert!(run_args(&args(&["sweep", "--preset", "tiny", "--variable", "bandwidth"])).is_err());
    assert!(run_args(&args(&[])).is_err());
}
