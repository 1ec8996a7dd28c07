use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{Conv2d, Dense, Dropout, Layer, Mode, Pool, PoolMode, Rbf, Reshape, Shape};
use super::loss::{mse, mse_grad};
use super::tensor::Tensor;
use super::NnError;

/// A feed-forward chain of layers whose shapes were checked when it was built.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Network {
    pub input: Shape,
    pub layers: Vec<Layer>,
}

impl Network {
    pub fn new(inputs: usize) -> Self {
        Network { input: Shape::flat(inputs), layers: Vec::new() }
    }

    pub fn output_shape(&self) -> Shape {
        self.layers.iter().fold(self.input, |s, l| l.output_shape(s).expect("layers were shape-checked"))
    }

    pub fn outputs(&self) -> usize {
        self.output_shape().len()
    }

    pub fn push(mut self, layer: Layer) -> Result<Self, NnError> {
        let at = self.output_shape();
        layer.output_shape(at).map_err(|reason| NnError::Shape {
            layer: self.layers.len(),
            name: layer.name(),
            reason,
        })?;
        self.layers.push(layer);
        Ok(self)
    }

    pub fn dense(self, h: usize, rng: &mut ChaCha8Rng) -> Result<Self, NnError> {
        let n = self.output_shape().len();
        self.push(Layer::Dense(Dense::new(n, h, rng)))
    }

    /// Dense layer starting from all-zero weights.
    pub fn dense_zeroed(self, h: usize) -> Result<Self, NnError> {
        let n = self.output_shape().len();
        self.push(Layer::Dense(Dense::zeroed(n, h)))
    }

    pub fn conv(self, filters: usize, k1: usize, k2: usize, rng: &mut ChaCha8Rng) -> Result<Self, NnError> {
        let at = self.output_shape();
        self.push(Layer::Conv2d(Conv2d::new(at, filters, k1, k2, rng)))
    }

    pub fn pool(self, m1: usize, m2: usize, mode: PoolMode) -> Result<Self, NnError> {
        let at = self.output_shape();
        self.push(Layer::Pool(Pool::new(at, m1, m2, mode)))
    }

    pub fn relu(self) -> Result<Self, NnError> {
        self.push(Layer::relu())
    }

    pub fn dropout(self, p: f64) -> Result<Self, NnError> {
        self.push(Layer::Dropout(Dropout::new(p)))
    }

    pub fn rbf(self, centers: Vec<f64>, sigmas: Vec<f64>) -> Result<Self, NnError> {
        let dim = self.output_shape().len();
        if sigmas.is_empty() || centers.len() != dim * sigmas.len() {
            return Err(NnError::Shape {
                layer: self.layers.len(),
                name: "rbf".into(),
                reason: format!("{} center values for {} units of dimension {dim}", centers.len(), sigmas.len()),
            });
        }
        self.push(Layer::Rbf(Rbf::new(dim, centers, sigmas)))
    }

    pub fn reshape(self, h: usize, w: usize) -> Result<Self, NnError> {
        let inputs = self.output_shape().len();
        self.push(Layer::Reshape(Reshape { inputs, h, w }))
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// Batched forward pass; `x` is `batch × inputs`.
    pub fn forward(&mut self, x: &Tensor, mode: &mut Mode) -> Result<Tensor, NnError> {
        if x.row_len() != self.input.len() {
            return Err(NnError::ShapeMismatch(format!("network takes {} inputs, got {}", self.input.len(), x.row_len())));
        }
        let mut a = Tensor { shape: vec![x.rows(), x.row_len()], data: x.data.clone() };
        for layer in &mut self.layers {
            a = layer.forward(&a, mode);
        }
        if !a.is_finite() {
            return Err(NnError::NonFinite("forward pass produced a non-finite activation".into()));
        }
        let n = a.rows();
        let w = a.row_len();
        a.shape = vec![n, w];
        Ok(a)
    }

    pub fn predict(&mut self, x: &Tensor) -> Result<Tensor, NnError> {
        self.forward(x, &mut Mode::Eval)
    }

    /// Back-propagates `dy` (gradient of the loss w.r.t. the last forward
    /// output) and returns the gradient w.r.t. the network input.
    pub fn backward(&mut self, dy: &Tensor, input_grad: bool) -> Result<Tensor, NnError> {
        let mut g = dy.clone();
        for (i, layer) in self.layers.iter_mut().enumerate().rev() {
            g = layer.backward(&g, i > 0 || input_grad);
        }
        let finite = g.is_finite() && self.layers.iter_mut().all(|l| l.params().iter().all(|(_, gr)| gr.iter().all(|v| v.is_finite())));
        if !finite {
            return Err(NnError::NonFiniteGradient("backward pass produced a non-finite gradient".into()));
        }
        Ok(g)
    }

    /// Trainable (weights, gradient) pairs in a fixed order.
    pub fn params(&mut self) -> Vec<(&mut [f64], &[f64])> {
        self.layers.iter_mut().flat_map(|l| l.params()).collect()
    }

    /// Mean squared error of one batch, leaving gradients in the layers.
    pub fn mse_step(&mut self, x: &Tensor, y: &Tensor, mode: &mut Mode) -> Result<f64, NnError> {
        let pred = self.forward(x, mode)?;
        let loss = mse(&pred.data, &y.data)?;
        self.backward(&Tensor { shape: pred.shape, data: mse_grad(&pred.data, &y.data) }, false)?;
        Ok(loss)
    }
}

/// Worst relative error between analytic and central-difference gradients of
/// the batch MSE, over every parameter tensor and the input. Each tensor is
/// compared as a whole: `‖a − n‖ / max(‖a‖ + ‖n‖, 1e-12)`. Runs in eval mode.
pub fn gradcheck(net: &mut Network, x: &Tensor, y: &Tensor, h: f64) -> Result<f64, NnError> {
    let pred = net.forward(x, &mut Mode::Eval)?;
    let dx = net.backward(&Tensor { shape: pred.shape.clone(), data: mse_grad(&pred.data, &y.data) }, true)?;
    let analytic: Vec<Vec<f64>> = net.params().into_iter().map(|(_, g)| g.to_vec()).collect();

    let loss_at = |net: &mut Network, x: &Tensor| -> Result<f64, NnError> { mse(&net.forward(x, &mut Mode::Eval)?.data, &y.data) };
    let rel = |a: &[f64], n: &[f64]| {
        let diff: f64 = a.iter().zip(n).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
        let scale = a.iter().map(|v| v * v).sum::<f64>().sqrt() + n.iter().map(|v| v * v).sum::<f64>().sqrt();
        diff / scale.max(1e-12)
    };

    let mut worst = 0.0f64;
    for (t, a) in analytic.iter().enumerate() {
        let mut numeric = vec![0.0; a.len()];
        for (i, slot) in numeric.iter_mut().enumerate() {
            let orig = net.params()[t].0[i];
            net.params()[t].0[i] = orig + h;
            let up = loss_at(net, x)?;
            net.params()[t].0[i] = orig - h;
            let down = loss_at(net, x)?;
            net.params()[t].0[i] = orig;
            *slot = (up - down) / (2.0 * h);
        }
        worst = worst.max(rel(a, &numeric));
    }
    let mut numeric = vec![0.0; x.len()];
    let mut xp = x.clone();
    for (i, slot) in numeric.iter_mut().enumerate() {
        let orig = xp.data[i];
        xp.data[i] = orig + h;
        let up = loss_at(net, &xp)?;
        xp.data[i] = orig - h;
        let down = loss_at(net, &xp)?;
        xp.data[i] = orig;
        *slot = (up - down) / (2.0 * h);
    }
    Ok(worst.max(rel(&dx.data, &numeric)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn batch(rows: usize, cols: usize, r: &mut ChaCha8Rng) -> Tensor {
        Tensor::matrix(rows, cols, (0..rows * cols).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn shape_errors_name_the_layer() {
        let mut r = rng(0);
        let err = Network::new(42).reshape(7, 6).unwrap().conv(32, 2, 2, &mut r).unwrap().pool(2, 2, PoolMode::Max).unwrap_err();
        match err {
            NnError::Shape { layer, name, .. } => {
                assert_eq!(layer, 2);
                assert_eq!(name, "maxpool(2x2)");
            }
            e => panic!("{e}"),
        }
        assert!(Network::new(50).reshape(7, 7).is_err());
        assert!(Network::new(4).dropout(1.0).is_err());
    }

    #[test]
    fn zero_error_gives_zero_gradients() {
        let mut r = rng(3);
        let mut net = Network::new(5).dense(4, &mut r).unwrap().relu().unwrap().dense(3, &mut r).unwrap();
        let x = batch(6, 5, &mut r);
        let y = net.predict(&x).unwrap();
        let loss = net.mse_step(&x, &y, &mut Mode::Eval).unwrap();
        assert_eq!(loss, 0.0);
        assert!(net.params().iter().all(|(_, g)| g.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn scalar_dense_gradient_by_hand() {
        let (w, b, x, y) = (0.7, -0.2, 1.5, 0.4);
        let mut net = Network::new(1).push(Layer::Dense(Dense::from_weights(1, 1, vec![w], vec![b]))).unwrap();
        net.mse_step(&Tensor::matrix(1, 1, vec![x]).unwrap(), &Tensor::matrix(1, 1, vec![y]).unwrap(), &mut Mode::Eval).unwrap();
        let grads: Vec<f64> = net.params().iter().map(|(_, g)| g[0]).collect();
        assert!((grads[0] - 2.0 * (w * x + b - y) * x).abs() < 1e-15);
        assert!((grads[1] - 2.0 * (w * x + b - y)).abs() < 1e-15);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut r = rng(11);
        let mut cnn = Network::new(14)
            .reshape(4, 4)
            .unwrap()
            .conv(3, 2, 2, &mut r)
            .unwrap()
            .relu()
            .unwrap()
            .dropout(0.3)
            .unwrap()
            .conv(2, 2, 2, &mut r)
            .unwrap()
            .pool(2, 1, PoolMode::Avg)
            .unwrap()
            .dense(3, &mut r)
            .unwrap();
        let x = batch(3, 14, &mut r);
        let y = batch(3, 3, &mut r);
        let err = gradcheck(&mut cnn, &x, &y, 1e-5).unwrap();
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn forward_rejects_nan() {
        let mut r = rng(1);
        let mut net = Network::new(2).dense(2, &mut r).unwrap();
        let x = Tensor::matrix(1, 2, vec![f64::NAN, 0.0]).unwrap();
        assert!(matches!(net.predict(&x), Err(NnError::NonFinite(_))));
    }
}
