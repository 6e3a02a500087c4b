use jrnra_core::env::{evaluate_decision, Environment, EvalOptions, JointEnv};
use jrnra_core::oracle::{enumerate_best, oracle_evaluate, TinyInstance};
use jrnra_core::radio::sample_channel;
use jrnra_core::scenarios;

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

#[test]
fn reference_instance_best_ee() {
    let cfg = scenarios::tiny_reference();
    let ch = sample_channel(&cfg, scenarios::REFERENCE_SEED);
    let inst = TinyInstance::new(cfg.clone()).unwrap();
    let best = enumerate_best(&inst, &ch).unwrap();
    assert!(close(best.best_ee, 0.911075762904773, 1e-12), "{}", best.best_ee);
    assert_eq!(best.index, 385);

    // the environment scores the optimum identically
    let env = evaluate_decision(&cfg, &ch, &best.decision, &EvalOptions::joint()).unwrap();
    assert!(close(env.energy_efficiency, best.best_ee, 1e-12));
    assert_eq!(env.admitted, oracle_evaluate(&cfg, &ch, &best.decision).admitted);
}

#[test]
fn builtin_channel_checksum() {
    let ch = sample_channel(&scenarios::builtin(), 7);
    assert!(close(ch.gains.sum(), 1.431714286469708e-7, 1e-12));
}

#[test]
fn builtin_reset_state_mean() {
    let mut env = JointEnv::new(scenarios::builtin(), EvalOptions::joint());
    let s = env.reset(0);
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    assert!((-3.0..=3.0).contains(&mean));
    assert!(close(mean, -0.011087923241647955, 1e-9));
}
