//! State-action value networks and the update rules shared by every trainer.

use ndarray::{concatenate, s, Array1, Array2, Axis};
use rand::Rng;

use crate::adam::Adam;
use crate::mlp::{Mlp, MlpError};

/// Anything that scores state-action pairs and can report `dQ/da`.
pub trait QFunction {
    /// Per-row values and action gradients.
    fn value_and_action_grad(
        &self,
        states: &Array2<f64>,
        actions: &Array2<f64>,
    ) -> Result<(Array1<f64>, Array2<f64>), MlpError>;

    fn values(&self, states: &Array2<f64>, actions: &Array2<f64>) -> Result<Array1<f64>, MlpError> {
        Ok(self.value_and_action_grad(states, actions)?.0)
    }
}

/// `Q(s, a)` as an MLP on the concatenated input.
#[derive(Debug, Clone, PartialEq)]
pub struct Critic {
    pub net: Mlp,
    pub state_dim: usize,
}

fn joined(states: &Array2<f64>, actions: &Array2<f64>) -> Array2<f64> {
    concatenate(Axis(1), &[states.view(), actions.view()]).expect("matching row counts")
}

impl Critic {
    pub fn new(net: Mlp, state_dim: usize) -> Self {
        assert_eq!(net.output_size(), 1, "critic emits one value");
        assert!(net.input_size() > state_dim, "critic input holds state and action");
        Self { net, state_dim }
    }

    pub fn random<R: Rng + ?Sized>(state_dim: usize, action_dim: usize, hidden: &[usize], rng: &mut R) -> Self {
        let mut sizes = vec![state_dim + action_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        Self::new(Mlp::random(&sizes, 1.0, rng).expect("positive layer sizes"), state_dim)
    }

    /// `0.5 * mean (Q(s,a) - y)^2` and its parameter gradient.
    pub fn loss_and_grad(
        &self,
        states: &Array2<f64>,
        actions: &Array2<f64>,
        targets: &Array1<f64>,
    ) -> Result<(f64, Mlp), MlpError> {
        let cache = self.net.forward_batch(&joined(states, actions))?;
        let q = cache.output().column(0).to_owned();
        let diff = &q - targets;
        let n = diff.len() as f64;
        let loss = 0.5 * diff.mapv(|d| d * d).sum() / n;
        let up = (diff / n).insert_axis(Axis(1));
        let (grad, _) = self.net.backward_batch(&cache, &up)?;
        Ok((loss, grad))
    }
}

impl QFunction for Critic {
    fn value_and_action_grad(
        &self,
        states: &Array2<f64>,
        actions: &Array2<f64>,
    ) -> Result<(Array1<f64>, Array2<f64>), MlpError> {
        let cache = self.net.forward_batch(&joined(states, actions))?;
        let q = cache.output().column(0).to_owned();
        let ones = Array2::ones((q.len(), 1));
        let (_, dx) = self.net.backward_batch(&cache, &ones)?;
        Ok((q, dx.slice(s![.., self.state_dim..]).to_owned()))
    }

    fn values(&self, states: &Array2<f64>, actions: &Array2<f64>) -> Result<Array1<f64>, MlpError> {
        let out = self.net.forward_batch(&joined(states, actions))?;
        Ok(out.output().column(0).to_owned())
    }
}

/// Row-wise minimum of two Q-functions, with the gradient of whichever won.
pub struct TwinMin<'a>(pub &'a dyn QFunction, pub &'a dyn QFunction);

impl QFunction for TwinMin<'_> {
    fn value_and_action_grad(
        &self,
        states: &Array2<f64>,
        actions: &Array2<f64>,
    ) -> Result<(Array1<f64>, Array2<f64>), MlpError> {
        let (q1, mut g1) = self.0.value_and_action_grad(states, actions)?;
        let (q2, g2) = self.1.value_and_action_grad(states, actions)?;
        let mut q = q1;
        for i in 0..q.len() {
            if q2[i] < q[i] {
                q[i] = q2[i];
                g1.row_mut(i).assign(&g2.row(i));
            }
        }
        Ok((q, g1))
    }

    fn values(&self, states: &Array2<f64>, actions: &Array2<f64>) -> Result<Array1<f64>, MlpError> {
        let q1 = self.0.values(states, actions)?;
        let q2 = self.1.values(states, actions)?;
        Ok(ndarray::Zip::from(&q1).and(&q2).map_collect(|a, b| a.min(*b)))
    }
}

/// One Adam step on the squared Bellman error against fixed `targets`.
/// Returns the loss before the step.
pub fn critic_update(
    critic: &mut Critic,
    opt: &mut Adam,
    states: &Array2<f64>,
    actions: &Array2<f64>,
    targets: &Array1<f64>,
    lr: f64,
) -> Result<f64, MlpError> {
    let (loss, grad) = critic.loss_and_grad(states, actions, targets)?;
    opt.step(&mut critic.net, &grad, lr);
    Ok(loss)
}

/// `online -> target` Polyak averaging.
pub fn target_update(online: &Mlp, target: &mut Mlp, coeff: f64) {
    target.soft_update_from(online, coeff);
}
