use crate::mlp::Mlp;

/// Inverse-time decay `lr0 / (1 + kappa * t)^power`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrSchedule {
    pub lr0: f64,
    pub kappa: f64,
    pub power: f64,
}

impl LrSchedule {
    pub fn constant(lr0: f64) -> Self {
        Self {
            lr0,
            kappa: 0.0,
            power: 1.0,
        }
    }

    pub fn inverse_time(lr0: f64, kappa: f64, power: f64) -> Self {
        Self { lr0, kappa, power }
    }

    pub fn at(&self, t: u64) -> f64 {
        self.lr0 / (1.0 + self.kappa * t as f64).powf(self.power)
    }
}

/// Adam with bias-corrected moments, one instance per network.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub m: Mlp,
    pub v: Mlp,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Adam {
    pub fn new(like: &Mlp) -> Self {
        Self {
            m: like.zeros_like(),
            v: like.zeros_like(),
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    /// One descent step on `p` along `g`.
    pub fn step(&mut self, p: &mut Mlp, g: &Mlp, lr: f64) {
        self.t += 1;
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let c1 = 1.0 - b1.powi(self.t as i32);
        let c2 = 1.0 - b2.powi(self.t as i32);
        let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let mh = *m / c1;
            let vh = *v / c2;
            *p -= lr * mh / (vh.sqrt() + eps);
        };
        for l in 0..p.layers.len() {
            let (pl, gl) = (&mut p.layers[l], &g.layers[l]);
            let (ml, vl) = (&mut self.m.layers[l], &mut self.v.layers[l]);
            ndarray::Zip::from(&mut pl.w)
                .and(&gl.w)
                .and(&mut ml.w)
                .and(&mut vl.w)
                .for_each(|p, &g, m, v| update(p, g, m, v));
            ndarray::Zip::from(&mut pl.b)
                .and(&gl.b)
                .and(&mut ml.b)
                .and(&mut vl.b)
                .for_each(|p, &g, m, v| update(p, g, m, v));
        }
    }
}
