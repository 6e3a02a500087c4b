//! Fully connected network with tanh hidden layers and a linear output.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MlpError {
    #[error("expected input width {expected}, got {got}")]
    Input { expected: usize, got: usize },
    #[error("expected upstream width {expected}, got {got}")]
    Upstream { expected: usize, got: usize },
    #[error("a network needs at least an input and an output layer, got sizes {0:?}")]
    Shape(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `out x in`
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub sizes: Vec<usize>,
    pub layers: Vec<Layer>,
}

/// Activations kept from a batched forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `acts[0]` is the input, `acts[l]` the output of layer `l - 1`.
    acts: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        self.acts.last().expect("non-empty cache")
    }
}

impl Mlp {
    pub fn zeros(sizes: &[usize]) -> Result<Self, MlpError> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(MlpError::Shape(sizes.to_vec()));
        }
        let layers = sizes
            .windows(2)
            .map(|w| Layer {
                w: Array2::zeros((w[1], w[0])),
                b: Array1::zeros(w[1]),
            })
            .collect();
        Ok(Self {
            sizes: sizes.to_vec(),
            layers,
        })
    }

    /// Xavier-uniform weights, zero biases; the output layer is scaled by
    /// `final_scale`.
    pub fn random<R: Rng + ?Sized>(sizes: &[usize], final_scale: f64, rng: &mut R) -> Result<Self, MlpError> {
        let mut net = Self::zeros(sizes)?;
        let last = net.layers.len() - 1;
        for (l, layer) in net.layers.iter_mut().enumerate() {
            let (out, inp) = layer.w.dim();
            let mut limit = (6.0 / (inp + out) as f64).sqrt();
            if l == last {
                limit *= final_scale;
            }
            layer.w.mapv_inplace(|_| rng.random_range(-limit..=limit));
        }
        Ok(net)
    }

    pub fn input_size(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.sizes.last().expect("validated sizes")
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Same shape, all zeros; used for gradients and optimiser moments.
    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.sizes).expect("shape already valid")
    }

    pub fn forward_batch(&self, x: &Array2<f64>) -> Result<ForwardCache, MlpError> {
        if x.ncols() != self.input_size() {
            return Err(MlpError::Input {
                expected: self.input_size(),
                got: x.ncols(),
            });
        }
        let last = self.layers.len() - 1;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.clone());
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = acts[l].dot(&layer.w.t());
            z += &layer.b;
            if l != last {
                z.mapv_inplace(f64::tanh);
            }
            acts.push(z);
        }
        Ok(ForwardCache { acts })
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, MlpError> {
        let x = Array2::from_shape_vec((1, x.len()), x.to_vec()).expect("row vector");
        Ok(self.forward_batch(&x)?.output().row(0).to_vec())
    }

    /// Reverse pass of `sum(upstream .* output)` summed over the batch.
    /// Returns parameter gradients and the gradient with respect to the input.
    pub fn backward_batch(&self, cache: &ForwardCache, upstream: &Array2<f64>) -> Result<(Mlp, Array2<f64>), MlpError> {
        if upstream.ncols() != self.output_size() || upstream.nrows() != cache.output().nrows() {
            return Err(MlpError::Upstream {
                expected: self.output_size(),
                got: upstream.ncols(),
            });
        }
        let mut grads = self.zeros_like();
        let mut dz = upstream.clone();
        for l in (0..self.layers.len()).rev() {
            let a_prev = &cache.acts[l];
            grads.layers[l].w = dz.t().dot(a_prev);
            grads.layers[l].b = dz.sum_axis(Axis(0));
            let mut da = dz.dot(&self.layers[l].w);
            if l > 0 {
                ndarray::Zip::from(&mut da)
                    .and(a_prev)
                    .for_each(|d, &a| *d *= 1.0 - a * a);
            }
            dz = da;
        }
        Ok((grads, dz))
    }

    pub fn backward(&self, x: &[f64], upstream: &[f64]) -> Result<(Mlp, Vec<f64>), MlpError> {
        let xb = Array2::from_shape_vec((1, x.len()), x.to_vec()).expect("row vector");
        let cache = self.forward_batch(&xb)?;
        let up = Array2::from_shape_vec((1, upstream.len()), upstream.to_vec()).expect("row vector");
        let (g, dx) = self.backward_batch(&cache, &up)?;
        Ok((g, dx.row(0).to_vec()))
    }

    /// Every parameter in layer order, weights row-major before biases.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend(l.w.iter());
            out.extend(l.b.iter());
        }
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.num_params(), "parameter count");
        let mut it = flat.iter();
        for l in &mut self.layers {
            l.w.iter_mut().for_each(|w| *w = *it.next().expect("length checked"));
            l.b.iter_mut().for_each(|b| *b = *it.next().expect("length checked"));
        }
    }

    /// `target <- coeff * online + (1 - coeff) * target`
    pub fn soft_update_from(&mut self, online: &Mlp, coeff: f64) {
        for (t, o) in self.layers.iter_mut().zip(&online.layers) {
            t.w.zip_mut_with(&o.w, |t, &o| *t = coeff * o + (1.0 - coeff) * *t);
            t.b.zip_mut_with(&o.b, |t, &o| *t = coeff * o + (1.0 - coeff) * *t);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.w.iter().chain(l.b.iter()))
            .fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Largest relative error between [`Mlp::backward`] and central differences
/// of `upstream . forward(x)`, over every parameter. Magnitudes below `floor`
/// are compared absolutely.
pub fn gradient_check(net: &Mlp, x: &[f64], upstream: &[f64], step: f64, floor: f64) -> Result<f64, MlpError> {
    let (analytic, _) = net.backward(x, upstream)?;
    let analytic = analytic.to_flat();
    let base = net.to_flat();
    let mut probe = net.clone();
    let mut objective = |params: &[f64]| -> Result<f64, MlpError> {
        probe.set_flat(params);
        Ok(probe.forward(x)?.iter().zip(upstream).map(|(o, u)| o * u).sum())
    };
    let mut worst: f64 = 0.0;
    let mut params = base.clone();
    for i in 0..base.len() {
        params[i] = base[i] + step;
        let plus = objective(&params)?;
        params[i] = base[i] - step;
        let minus = objective(&params)?;
        params[i] = base[i];
        let numeric = (plus - minus) / (2.0 * step);
        let scale = analytic[i].abs().max(numeric.abs()).max(floor);
        worst = worst.max((analytic[i] - numeric).abs() / scale);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_net_outputs_zero() {
        let net = Mlp::zeros(&[3, 5, 2]).unwrap();
        assert_eq!(net.forward(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn identity_net() {
        let mut net = Mlp::zeros(&[1, 1]).unwrap();
        net.layers[0].w[[0, 0]] = 1.0;
        for x in [-3.0, 0.0, 2.5] {
            assert_eq!(net.forward(&[x]).unwrap(), vec![x]);
        }
    }

    #[test]
    fn dimension_errors() {
        let net = Mlp::zeros(&[3, 2]).unwrap();
        assert_eq!(net.forward(&[1.0]), Err(MlpError::Input { expected: 3, got: 1 }));
        assert!(net.backward(&[1.0, 2.0, 3.0], &[1.0]).is_err());
        assert!(Mlp::zeros(&[3]).is_err());
    }

    #[test]
    fn zero_upstream_zero_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = Mlp::random(&[4, 8, 2], 1.0, &mut rng).unwrap();
        let (g, dx) = net.backward(&[0.1, 0.2, 0.3, 0.4], &[0.0, 0.0]).unwrap();
        assert!(g.to_flat().iter().all(|&x| x == 0.0));
        assert!(dx.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn one_parameter_gradient() {
        // f(x) = w * x, df/dw = x
        let mut net = Mlp::zeros(&[1, 1]).unwrap();
        net.layers[0].w[[0, 0]] = 0.7;
        let (g, dx) = net.backward(&[3.0], &[1.0]).unwrap();
        assert_eq!(g.layers[0].w[[0, 0]], 3.0);
        assert_eq!(g.layers[0].b[0], 1.0);
        assert_eq!(dx, vec![0.7]);
    }

    #[test]
    fn flat_round_trip_and_soft_update() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = Mlp::random(&[2, 3, 1], 1.0, &mut rng).unwrap();
        let mut b = a.zeros_like();
        b.set_flat(&a.to_flat());
        assert_eq!(a, b);

        let mut t = Mlp::zeros(&[1, 1]).unwrap();
        let mut o = t.clone();
        o.layers[0].w[[0, 0]] = 1.0;
        t.soft_update_from(&o, 0.0);
        assert_eq!(t.layers[0].w[[0, 0]], 0.0);
        t.soft_update_from(&o, 0.05);
        assert_eq!(t.layers[0].w[[0, 0]], 0.05);
        t.soft_update_from(&o, 1.0);
        assert_eq!(t, o);
    }
}
