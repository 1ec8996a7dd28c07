use serde::{Deserialize, Serialize};

/// Adam with bias correction. Moments are kept per parameter tensor, in the
/// order the tensors are handed to [`Adam::step`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub const BETA1: f64 = 0.5;

    pub fn new(lr: f64) -> Self {
        Adam { lr, beta1: Self::BETA1, beta2: 0.999, eps: 1e-8, t: 0, m: Vec::new(), v: Vec::new() }
    }

    pub fn step(&mut self, params: Vec<(&mut [f64], &[f64])>) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for (i, (w, g)) in params.into_iter().enumerate() {
            if i == self.m.len() {
                self.m.push(vec![0.0; w.len()]);
                self.v.push(vec![0.0; w.len()]);
            }
            assert_eq!(g.len(), w.len(), "gradient missing for parameter tensor {i}");
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for j in 0..w.len() {
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * g[j];
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * g[j] * g[j];
                w[j] -= self.lr * (m[j] / c1) / ((v[j] / c2).sqrt() + self.eps);
            }
        }
    }
}
