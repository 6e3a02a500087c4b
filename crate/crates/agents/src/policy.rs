//! Tanh-squashed diagonal Gaussian policy head.

use ndarray::{s, Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::mlp::{ForwardCache, Mlp, MlpError};

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Largest magnitude a returned action component may take.
pub const ACTION_BOUND: f64 = 1.0 - f64::EPSILON;

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `log(1 - tanh(u)^2)` without cancellation for large `|u|`.
pub fn log_one_minus_tanh_sq(u: f64) -> f64 {
    2.0 * (std::f64::consts::LN_2 - u - softplus(-2.0 * u))
}

/// Log-density of `tanh(mu + sigma * xi)` under the squashed Gaussian.
pub fn squashed_log_prob(xi: &[f64], u: &[f64], log_std: &[f64]) -> f64 {
    xi.iter()
        .zip(u)
        .zip(log_std)
        .map(|((&x, &u), &ls)| -0.5 * x * x - ls - HALF_LN_2PI - log_one_minus_tanh_sq(u))
        .sum()
}

/// Actor network emitting `[mean | log_std]` for each action dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct SquashedGaussian {
    pub net: Mlp,
    pub action_dim: usize,
}

/// A reparameterised batch draw, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct BatchSample {
    cache: ForwardCache,
    xi: Array2<f64>,
    sigma: Array2<f64>,
    /// `tanh(u)` before clamping to the action bound.
    squashed: Array2<f64>,
    clamped_std: Array2<bool>,
    pub actions: Array2<f64>,
    pub log_probs: Array1<f64>,
}

impl SquashedGaussian {
    pub fn new(net: Mlp) -> Self {
        assert_eq!(net.output_size() % 2, 0, "policy output must be [mean | log_std]");
        let action_dim = net.output_size() / 2;
        Self { net, action_dim }
    }

    pub fn random<R: Rng + ?Sized>(state_dim: usize, hidden: &[usize], action_dim: usize, rng: &mut R) -> Self {
        let mut sizes = vec![state_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(2 * action_dim);
        Self::new(Mlp::random(&sizes, 0.1, rng).expect("positive layer sizes"))
    }

    /// `tanh(mean)`, the noise-free action.
    pub fn mean_action(&self, state: &[f64]) -> Result<Vec<f64>, MlpError> {
        let out = self.net.forward(state)?;
        Ok(out[..self.action_dim]
            .iter()
            .map(|m| m.tanh().clamp(-ACTION_BOUND, ACTION_BOUND))
            .collect())
    }

    /// One action and its log-probability.
    pub fn sample<R: Rng + ?Sized>(&self, state: &[f64], rng: &mut R) -> Result<(Vec<f64>, f64), MlpError> {
        let x = Array2::from_shape_vec((1, state.len()), state.to_vec()).expect("row vector");
        let b = self.sample_batch(&x, rng)?;
        Ok((b.actions.row(0).to_vec(), b.log_probs[0]))
    }

    pub fn sample_batch<R: Rng + ?Sized>(&self, states: &Array2<f64>, rng: &mut R) -> Result<BatchSample, MlpError> {
        let cache = self.net.forward_batch(states)?;
        let out = cache.output();
        let (n, a) = (out.nrows(), self.action_dim);
        let xi = Array2::from_shape_fn((n, a), |_| rng.sample::<f64, _>(StandardNormal));
        self.sample_with_noise(cache, xi)
    }

    /// As [`Self::sample_batch`] with caller-supplied standard normal noise.
    pub fn sample_with_noise(&self, cache: ForwardCache, xi: Array2<f64>) -> Result<BatchSample, MlpError> {
        let out = cache.output();
        let (n, a) = (out.nrows(), self.action_dim);
        let mean = out.slice(s![.., ..a]);
        let raw_std = out.slice(s![.., a..]);
        let clamped_std = raw_std.mapv(|l| !(LOG_STD_MIN..=LOG_STD_MAX).contains(&l));
        let log_std = raw_std.mapv(|l| l.clamp(LOG_STD_MIN, LOG_STD_MAX));
        let sigma = log_std.mapv(f64::exp);
        let u = &mean + &(&sigma * &xi);
        let squashed = u.mapv(f64::tanh);
        let actions = squashed.mapv(|t| t.clamp(-ACTION_BOUND, ACTION_BOUND));
        let log_probs = Array1::from_shape_fn(n, |i| {
            squashed_log_prob(
                xi.row(i).as_slice().expect("standard layout"),
                u.row(i).to_vec().as_slice(),
                log_std.row(i).to_vec().as_slice(),
            )
        });
        Ok(BatchSample {
            cache,
            xi,
            sigma,
            squashed,
            clamped_std,
            actions,
            log_probs,
        })
    }

    /// Gradients of `sum_i (dl_da[i] . a_i + dl_dlogp[i] * log_prob_i)` with
    /// respect to the actor parameters, noise held fixed.
    pub fn backward(&self, b: &BatchSample, dl_da: &Array2<f64>, dl_dlogp: &Array1<f64>) -> Result<Mlp, MlpError> {
        let (n, a) = (b.actions.nrows(), self.action_dim);
        let mut up = Array2::zeros((n, 2 * a));
        for i in 0..n {
            for k in 0..a {
                let t = b.squashed[[i, k]];
                let dadu = 1.0 - t * t;
                let g_u = dl_da[[i, k]] * dadu + dl_dlogp[i] * 2.0 * t;
                up[[i, k]] = g_u;
                if !b.clamped_std[[i, k]] {
                    let sx = b.sigma[[i, k]] * b.xi[[i, k]];
                    up[[i, a + k]] = g_u * sx - dl_dlogp[i];
                }
            }
        }
        Ok(self.net.backward_batch(&b.cache, &up)?.0)
    }

    pub fn log_std(&self, state: &[f64]) -> Result<Vec<f64>, MlpError> {
        let out = self.net.forward(state)?;
        Ok(out[self.action_dim..]
            .iter()
            .map(|l| l.clamp(LOG_STD_MIN, LOG_STD_MAX))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fixed_policy(mean: &[f64], log_std: &[f64]) -> SquashedGaussian {
        let a = mean.len();
        let mut net = Mlp::zeros(&[1, 2 * a]).unwrap();
        for k in 0..a {
            net.layers[0].b[k] = mean[k];
            net.layers[0].b[a + k] = log_std[k];
        }
        SquashedGaussian::new(net)
    }

    #[test]
    fn stable_log_term_matches_naive() {
        for u in [-3.0, -0.5, 0.0, 0.7, 2.0] {
            let naive = (1.0 - f64::tanh(u).powi(2)).ln();
            assert!((log_one_minus_tanh_sq(u) - naive).abs() < 1e-12);
        }
        assert!(log_one_minus_tanh_sq(40.0).is_finite());
    }

    #[test]
    fn tiny_sigma_gives_tanh_mean() {
        let p = fixed_policy(&[0.3, -1.2], &[-20.0, -30.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (a, lp) = p.sample(&[0.0], &mut rng).unwrap();
        assert!((a[0] - 0.3f64.tanh()).abs() < 1e-8);
        assert!((a[1] - (-1.2f64).tanh()).abs() < 1e-8);
        assert!(lp.is_finite());
        assert_eq!(p.mean_action(&[0.0]).unwrap(), vec![0.3f64.tanh(), (-1.2f64).tanh()]);
    }

    #[test]
    fn samples_stay_inside_bounds() {
        let p = fixed_policy(&[25.0, -25.0, 0.0], &[2.0, 2.0, 5.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let (a, lp) = p.sample(&[1.0], &mut rng).unwrap();
            assert!(a.iter().all(|x| x.abs() < 1.0));
            assert!(lp.is_finite());
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let p = fixed_policy(&[0.1], &[0.0]);
        let draw = |s| p.sample(&[0.0], &mut ChaCha8Rng::seed_from_u64(s)).unwrap();
        assert_eq!(draw(5), draw(5));
        assert_ne!(draw(5), draw(6));
    }
}
