use jrnra_agents::mlp::{gradient_check, Mlp};
use jrnra_agents::policy::{log_one_minus_tanh_sq, SquashedGaussian};
use jrnra_agents::replay::{ReplayMemory, Transition};
use ndarray::{array, Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[test]
fn backward_matches_central_differences() {
    for sizes in [vec![4, 8, 2], vec![6, 16, 16, 3], vec![3, 5, 5, 5, 2]] {
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let net = Mlp::random(&sizes, 1.0, &mut rng).unwrap();
            let x: Vec<f64> = (0..sizes[0]).map(|_| rng.random_range(-1.0..1.0)).collect();
            let up: Vec<f64> = (0..*sizes.last().unwrap()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let err = gradient_check(&net, &x, &up, 1e-5, 1e-6).unwrap();
            assert!(err < 1e-4, "{sizes:?} seed {seed}: {err:e}");
        }
    }
}

#[test]
fn batched_backward_sums_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let net = Mlp::random(&[3, 4, 2], 1.0, &mut rng).unwrap();
    let x = array![[0.1, -0.2, 0.3], [0.5, 0.0, -1.0]];
    let up = array![[1.0, -0.5], [0.25, 2.0]];
    let cache = net.forward_batch(&x).unwrap();
    let (g, dx) = net.backward_batch(&cache, &up).unwrap();
    let (g0, dx0) = net.backward(&[0.1, -0.2, 0.3], &[1.0, -0.5]).unwrap();
    let (g1, dx1) = net.backward(&[0.5, 0.0, -1.0], &[0.25, 2.0]).unwrap();
    let sum: Vec<f64> = g0.to_flat().iter().zip(g1.to_flat()).map(|(a, b)| a + b).collect();
    for (a, b) in g.to_flat().iter().zip(sum) {
        assert!((a - b).abs() < 1e-14);
    }
    assert_eq!(dx.row(0).to_vec(), dx0);
    assert_eq!(dx.row(1).to_vec(), dx1);
}

#[test]
fn policy_gradient_matches_finite_differences() {
    // objective: sum_i (w . a_i + c * log_prob_i) with noise held fixed
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let policy = SquashedGaussian::random(3, &[6], 2, &mut rng);
    let states = Array2::from_shape_fn((4, 3), |_| rng.random_range(-1.0..1.0));
    let xi = Array2::from_shape_fn((4, 2), |_| rng.random_range(-1.5..1.5));
    let w = array![[0.7, -0.3]];
    let c = 0.4;
    let objective = |p: &SquashedGaussian| {
        let b = p.sample_with_noise(p.net.forward_batch(&states).unwrap(), xi.clone()).unwrap();
        (&b.actions * &w).sum() + c * b.log_probs.sum()
    };
    let b = policy.sample_with_noise(policy.net.forward_batch(&states).unwrap(), xi.clone()).unwrap();
    let dl_da = Array2::from_shape_fn((4, 2), |(_, k)| w[[0, k]]);
    let grad = policy.backward(&b, &dl_da, &Array1::from_elem(4, c)).unwrap().to_flat();
    let base = policy.net.to_flat();
    let mut probe = policy.clone();
    let h = 1e-6;
    for i in 0..base.len() {
        let mut p = base.clone();
        p[i] += h;
        probe.net.set_flat(&p);
        let plus = objective(&probe);
        p[i] -= 2.0 * h;
        probe.net.set_flat(&p);
        let minus = objective(&probe);
        let numeric = (plus - minus) / (2.0 * h);
        let scale = grad[i].abs().max(numeric.abs()).max(1e-6);
        assert!((grad[i] - numeric).abs() / scale < 1e-4, "param {i}: {} vs {numeric}", grad[i]);
    }
}

/// `E[log(1 - tanh(u)^2)]` for `u ~ N(mu, sigma^2)` by composite Simpson.
fn expected_log_jacobian(mu: f64, sigma: f64) -> f64 {
    let n = 20_000;
    let (lo, hi) = (mu - 12.0 * sigma, mu + 12.0 * sigma);
    let h = (hi - lo) / n as f64;
    let f = |u: f64| {
        let z = (u - mu) / sigma;
        (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt()) * log_one_minus_tanh_sq(u)
    };
    let mut s = f(lo) + f(hi);
    for i in 1..n {
        s += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn monte_carlo_entropy_matches_quadrature() {
    let (mean, log_std) = ([0.3, -0.5], [-0.5, 0.2]);
    let mut net = Mlp::zeros(&[1, 4]).unwrap();
    for k in 0..2 {
        net.layers[0].b[k] = mean[k];
        net.layers[0].b[2 + k] = log_std[k];
    }
    let policy = SquashedGaussian::new(net);
    let exact: f64 = (0..2)
        .map(|k| {
            let sigma = f64::exp(log_std[k]);
            let gaussian = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * sigma * sigma).ln();
            gaussian + expected_log_jacobian(mean[k], sigma)
        })
        .sum();
    let states = Array2::zeros((100_000, 1));
    let b = policy.sample_batch(&states, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
    let mc = -b.log_probs.mean().unwrap();
    assert!((mc - exact).abs() < 0.01 * exact.abs(), "mc {mc} vs quadrature {exact}");
}

#[test]
fn replay_sampling_is_uniform() {
    let slots = 100;
    let mut m = ReplayMemory::new(slots);
    for i in 0..slots {
        m.push(Transition {
            state: vec![i as f64],
            action: vec![0.0],
            reward: 0.0,
            next_state: vec![0.0],
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut counts = vec![0u64; slots];
    let (batches, batch) = (3125, 32);
    for _ in 0..batches {
        let idx = m.sample_indices(batch, &mut rng);
        let mut sorted = idx.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), batch);
        for i in idx {
            counts[i] += 1;
        }
    }
    let expected = (batches * batch) as f64 / slots as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new((slots - 1) as f64).unwrap().cdf(chi2);
    assert!(p > 0.01, "chi2 {chi2}, p {p}");
}

#[test]
fn replay_respects_capacity() {
    let mut m = ReplayMemory::new(100_000);
    for i in 0..100_050 {
        m.push(Transition {
            state: vec![],
            action: vec![],
            reward: i as f64,
            next_state: vec![],
        });
        assert!(m.len() <= m.capacity());
    }
    assert_eq!(m.len(), 100_000);
}

#[test]
fn seed_zero_network_output_is_pinned() {
    let net = Mlp::random(&[3, 4, 2], 1.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let out = net.forward(&[0.5, -0.25, 1.0]).unwrap();
    assert_eq!(out, vec![0.4701325528411775, -0.1379374249265167]);
}
