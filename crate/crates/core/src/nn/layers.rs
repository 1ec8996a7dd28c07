use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tensor::{gemm, Tensor, View};
use super::NnError;

/// Per-sample activation shape: `c` maps of `h × w`. Flat vectors are `c × 1 × 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub c: usize,
    pub h: usize,
    pub w: usize,
}

impl Shape {
    pub fn flat(n: usize) -> Self {
        Shape { c: n, h: 1, w: 1 }
    }

    pub fn maps(c: usize, h: usize, w: usize) -> Self {
        Shape { c, h, w }
    }

    pub fn len(&self) -> usize {
        self.c * self.h * self.w
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.h == 1 && self.w == 1 {
            write!(f, "{}", self.c)
        } else {
            write!(f, "{}x{}x{}", self.c, self.h, self.w)
        }
    }
}

pub enum Mode<'a> {
    Train(&'a mut ChaCha8Rng),
    Eval,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolMode {
    Max,
    Avg,
}

/// Uniform in ±sqrt(6/(fan_in+fan_out)).
fn xavier(n: usize, fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..n).map(|_| rng.gen_range(-a..a)).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    /// `outputs × inputs`, row-major.
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    #[serde(skip)]
    gw: Vec<f64>,
    #[serde(skip)]
    gb: Vec<f64>,
    #[serde(skip)]
    x: Vec<f64>,
}

impl Dense {
    pub fn new(inputs: usize, outputs: usize, rng: &mut ChaCha8Rng) -> Self {
        Dense::from_weights(inputs, outputs, xavier(inputs * outputs, inputs, outputs, rng), vec![0.0; outputs])
    }

    pub fn zeroed(inputs: usize, outputs: usize) -> Self {
        Dense::from_weights(inputs, outputs, vec![0.0; inputs * outputs], vec![0.0; outputs])
    }

    pub fn from_weights(inputs: usize, outputs: usize, w: Vec<f64>, b: Vec<f64>) -> Self {
        assert_eq!(w.len(), inputs * outputs);
        assert_eq!(b.len(), outputs);
        Dense { inputs, outputs, w, b, gw: Vec::new(), gb: Vec::new(), x: Vec::new() }
    }

    fn forward(&mut self, x: &Tensor) -> Tensor {
        let n = x.rows();
        let mut y = vec![0.0; n * self.outputs];
        gemm(n, self.inputs, self.outputs, View::rm(&x.data, self.inputs), View::tr(&self.w, self.inputs), 0.0, &mut y);
        for row in y.chunks_exact_mut(self.outputs) {
            row.iter_mut().zip(&self.b).for_each(|(v, b)| *v += b);
        }
        self.x.clone_from(&x.data);
        Tensor { shape: vec![n, self.outputs], data: y }
    }

    fn backward(&mut self, dy: &Tensor, want_dx: bool) -> Tensor {
        let n = dy.rows();
        self.gw.resize(self.w.len(), 0.0);
        gemm(self.outputs, n, self.inputs, View::tr(&dy.data, self.outputs), View::rm(&self.x, self.inputs), 0.0, &mut self.gw);
        self.gb = vec![0.0; self.outputs];
        for row in dy.data.chunks_exact(self.outputs) {
            self.gb.iter_mut().zip(row).for_each(|(g, d)| *g += d);
        }
        let mut dx = vec![0.0; n * self.inputs];
        if want_dx {
            gemm(n, self.outputs, self.inputs, View::rm(&dy.data, self.outputs), View::rm(&self.w, self.inputs), 0.0, &mut dx);
        }
        Tensor { shape: vec![n, self.inputs], data: dx }
    }
}

/// Valid cross-correlation with stride 1, computed through im2col.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Conv2d {
    pub input: Shape,
    pub filters: usize,
    pub k1: usize,
    pub k2: usize,
    /// `filters × (c·k1·k2)`, row-major with index order (filter, map, row, col).
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    #[serde(skip)]
    gw: Vec<f64>,
    #[serde(skip)]
    gb: Vec<f64>,
    #[serde(skip)]
    cols: Vec<f64>,
}

impl Conv2d {
    pub fn new(input: Shape, filters: usize, k1: usize, k2: usize, rng: &mut ChaCha8Rng) -> Self {
        let k = input.c * k1 * k2;
        let w = xavier(filters * k, k, filters * k1 * k2, rng);
        Conv2d::from_weights(input, filters, k1, k2, w, vec![0.0; filters])
    }

    pub fn from_weights(input: Shape, filters: usize, k1: usize, k2: usize, w: Vec<f64>, b: Vec<f64>) -> Self {
        assert_eq!(w.len(), filters * input.c * k1 * k2);
        assert_eq!(b.len(), filters);
        Conv2d { input, filters, k1, k2, w, b, gw: Vec::new(), gb: Vec::new(), cols: Vec::new() }
    }

    pub fn output(&self) -> Shape {
        Shape::maps(self.filters, self.input.h + 1 - self.k1, self.input.w + 1 - self.k2)
    }

    fn patch(&self) -> usize {
        self.input.c * self.k1 * self.k2
    }

    fn forward(&mut self, x: &Tensor) -> Tensor {
        let n = x.rows();
        let Shape { c, h, w } = self.input;
        let out = self.output();
        let (p, k, f) = (out.h * out.w, self.patch(), self.filters);
        self.cols.resize(n * p * k, 0.0);
        for b in 0..n {
            let xb = &x.data[b * c * h * w..(b + 1) * c * h * w];
            for oy in 0..out.h {
                for ox in 0..out.w {
                    let row = &mut self.cols[((b * p) + oy * out.w + ox) * k..][..k];
                    let mut q = 0;
                    for ci in 0..c {
                        for i in 0..self.k1 {
                            let src = &xb[ci * h * w + (oy + i) * w + ox..][..self.k2];
                            row[q..q + self.k2].copy_from_slice(src);
                            q += self.k2;
                        }
                    }
                }
            }
        }
        let mut tmp = vec![0.0; n * p * f];
        gemm(n * p, k, f, View::rm(&self.cols, k), View::tr(&self.w, k), 0.0, &mut tmp);
        let mut y = vec![0.0; n * f * p];
        for b in 0..n {
            for q in 0..p {
                let src = &tmp[(b * p + q) * f..][..f];
                for fi in 0..f {
                    y[(b * f + fi) * p + q] = src[fi] + self.b[fi];
                }
            }
        }
        Tensor { shape: vec![n, f, out.h, out.w], data: y }
    }

    fn backward(&mut self, dy: &Tensor, want_dx: bool) -> Tensor {
        let n = dy.rows();
        let Shape { c, h, w } = self.input;
        let out = self.output();
        let (p, k, f) = (out.h * out.w, self.patch(), self.filters);
        let mut dyp = vec![0.0; n * p * f];
        self.gb = vec![0.0; f];
        for b in 0..n {
            for fi in 0..f {
                let src = &dy.data[(b * f + fi) * p..][..p];
                for (q, &d) in src.iter().enumerate() {
                    dyp[(b * p + q) * f + fi] = d;
                    self.gb[fi] += d;
                }
            }
        }
        self.gw.resize(f * k, 0.0);
        gemm(f, n * p, k, View::tr(&dyp, f), View::rm(&self.cols, k), 0.0, &mut self.gw);
        let mut dx = vec![0.0; n * c * h * w];
        if want_dx {
            let mut dcols = vec![0.0; n * p * k];
            gemm(n * p, f, k, View::rm(&dyp, f), View::rm(&self.w, k), 0.0, &mut dcols);
            for b in 0..n {
                let dxb = &mut dx[b * c * h * w..(b + 1) * c * h * w];
                for oy in 0..out.h {
                    for ox in 0..out.w {
                        let row = &dcols[((b * p) + oy * out.w + ox) * k..][..k];
                        let mut q = 0;
                        for ci in 0..c {
                            for i in 0..self.k1 {
                                let dst = &mut dxb[ci * h * w + (oy + i) * w + ox..][..self.k2];
                                dst.iter_mut().zip(&row[q..q + self.k2]).for_each(|(d, s)| *d += s);
                                q += self.k2;
                            }
                        }
                    }
                }
            }
        }
        Tensor { shape: vec![n, c, h, w], data: dx }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Pool {
    pub input: Shape,
    pub m1: usize,
    pub m2: usize,
    pub mode: PoolMode,
    #[serde(skip)]
    argmax: Vec<usize>,
}

impl Pool {
    pub fn new(input: Shape, m1: usize, m2: usize, mode: PoolMode) -> Self {
        Pool { input, m1, m2, mode, argmax: Vec::new() }
    }

    pub fn output(&self) -> Shape {
        Shape::maps(self.input.c, self.input.h / self.m1, self.input.w / self.m2)
    }

    fn forward(&mut self, x: &Tensor) -> Tensor {
        let n = x.rows();
        let Shape { c, h, w } = self.input;
        let out = self.output();
        let area = (self.m1 * self.m2) as f64;
        let mut y = Vec::with_capacity(n * out.len());
        self.argmax.clear();
        for m in 0..n * c {
            let base = m * h * w;
            for oy in 0..out.h {
                for ox in 0..out.w {
                    let mut best = (f64::NEG_INFINITY, 0);
                    let mut sum = 0.0;
                    for i in 0..self.m1 {
                        for j in 0..self.m2 {
                            let at = base + (oy * self.m1 + i) * w + ox * self.m2 + j;
                            let v = x.data[at];
                            sum += v;
                            if v > best.0 {
                                best = (v, at);
                            }
                        }
                    }
                    match self.mode {
                        PoolMode::Max => {
                            y.push(best.0);
                            self.argmax.push(best.1);
                        }
                        PoolMode::Avg => y.push(sum / area),
                    }
                }
            }
        }
        Tensor { shape: vec![n, c, out.h, out.w], data: y }
    }

    fn backward(&self, dy: &Tensor) -> Tensor {
        let n = dy.rows();
        let Shape { c, h, w } = self.input;
        let out = self.output();
        let mut dx = vec![0.0; n * c * h * w];
        match self.mode {
            PoolMode::Max => {
                for (&at, &d) in self.argmax.iter().zip(&dy.data) {
                    dx[at] += d;
                }
            }
            PoolMode::Avg => {
                let area = (self.m1 * self.m2) as f64;
                let mut it = dy.data.iter();
                for m in 0..n * c {
                    for oy in 0..out.h {
                        for ox in 0..out.w {
                            let d = it.next().unwrap() / area;
                            for i in 0..self.m1 {
                                for j in 0..self.m2 {
                                    dx[m * h * w + (oy * self.m1 + i) * w + ox * self.m2 + j] += d;
                                }
                            }
                        }
                    }
                }
            }
        }
        Tensor { shape: vec![n, c, h, w], data: dx }
    }
}

/// Inverted dropout: survivors are scaled by `1/(1-p)`, eval mode is the identity.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Dropout {
    pub p: f64,
    #[serde(skip)]
    mask: Option<Vec<f64>>,
}

impl Dropout {
    pub fn new(p: f64) -> Self {
        Dropout { p, mask: None }
    }

    fn forward(&mut self, x: &Tensor, mode: &mut Mode) -> Tensor {
        match mode {
            Mode::Train(rng) if self.p > 0.0 => {
                let keep = 1.0 / (1.0 - self.p);
                let mask: Vec<f64> = (0..x.len()).map(|_| if rng.gen::<f64>() < self.p { 0.0 } else { keep }).collect();
                let data = x.data.iter().zip(&mask).map(|(v, m)| v * m).collect();
                self.mask = Some(mask);
                Tensor { shape: x.shape.clone(), data }
            }
            _ => {
                self.mask = None;
                x.clone()
            }
        }
    }

    fn backward(&self, dy: &Tensor) -> Tensor {
        match &self.mask {
            Some(mask) => Tensor { shape: dy.shape.clone(), data: dy.data.iter().zip(mask).map(|(d, m)| d * m).collect() },
            None => dy.clone(),
        }
    }
}

/// Gaussian units `exp(-‖x-c‖²/(2σ²))` over frozen centers. The trainable
/// output weights live in the dense layer that follows.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Rbf {
    pub dim: usize,
    /// `k × dim`, row-major.
    pub centers: Vec<f64>,
    pub sigmas: Vec<f64>,
    #[serde(skip)]
    x: Vec<f64>,
    #[serde(skip)]
    phi: Vec<f64>,
}

pub const SIGMA_FLOOR: f64 = 1e-6;

impl Rbf {
    pub fn new(dim: usize, centers: Vec<f64>, sigmas: Vec<f64>) -> Self {
        assert_eq!(centers.len(), dim * sigmas.len());
        let sigmas = sigmas.into_iter().map(|s| s.max(SIGMA_FLOOR)).collect();
        Rbf { dim, centers, sigmas, x: Vec::new(), phi: Vec::new() }
    }

    pub fn k(&self) -> usize {
        self.sigmas.len()
    }

    fn forward(&mut self, x: &Tensor) -> Tensor {
        let n = x.rows();
        let k = self.k();
        let mut phi = Vec::with_capacity(n * k);
        for xb in x.data.chunks_exact(self.dim) {
            for (c, s) in self.centers.chunks_exact(self.dim).zip(&self.sigmas) {
                let d2: f64 = xb.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
                phi.push((-d2 / (2.0 * s * s)).exp());
            }
        }
        self.x.clone_from(&x.data);
        self.phi.clone_from(&phi);
        Tensor { shape: vec![n, k], data: phi }
    }

    fn backward(&self, dy: &Tensor, want_dx: bool) -> Tensor {
        let n = dy.rows();
        let k = self.k();
        let mut dx = vec![0.0; n * self.dim];
        if want_dx {
            for b in 0..n {
                let xb = &self.x[b * self.dim..][..self.dim];
                let dxb = &mut dx[b * self.dim..][..self.dim];
                for j in 0..k {
                    let s = self.sigmas[j];
                    let coef = dy.data[b * k + j] * self.phi[b * k + j] / (s * s);
                    let c = &self.centers[j * self.dim..][..self.dim];
                    for ((d, xi), ci) in dxb.iter_mut().zip(xb).zip(c) {
                        *d -= coef * (xi - ci);
                    }
                }
            }
        }
        Tensor { shape: vec![n, self.dim], data: dx }
    }
}

/// Flat vector to a single `h × w` map, zero-padding the tail.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Reshape {
    pub inputs: usize,
    pub h: usize,
    pub w: usize,
}

impl Reshape {
    fn forward(&self, x: &Tensor) -> Tensor {
        let n = x.rows();
        let area = self.h * self.w;
        let mut y = vec![0.0; n * area];
        for (dst, src) in y.chunks_exact_mut(area).zip(x.data.chunks_exact(self.inputs)) {
            dst[..self.inputs].copy_from_slice(src);
        }
        Tensor { shape: vec![n, 1, self.h, self.w], data: y }
    }

    fn backward(&self, dy: &Tensor) -> Tensor {
        let n = dy.rows();
        let area = self.h * self.w;
        let data = dy.data.chunks_exact(area).flat_map(|r| r[..self.inputs].iter().copied()).collect();
        Tensor { shape: vec![n, self.inputs], data }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Layer {
    Dense(Dense),
    Conv2d(Conv2d),
    Pool(Pool),
    Relu {
        #[serde(skip)]
        mask: Vec<bool>,
    },
    Dropout(Dropout),
    Rbf(Rbf),
    Reshape(Reshape),
}

impl Layer {
    pub fn relu() -> Self {
        Layer::Relu { mask: Vec::new() }
    }

    pub fn name(&self) -> String {
        match self {
            Layer::Dense(d) => format!("dense({})", d.outputs),
            Layer::Conv2d(c) => format!("conv({}@{}x{})", c.filters, c.k1, c.k2),
            Layer::Pool(p) => format!("{}pool({}x{})", if p.mode == PoolMode::Max { "max" } else { "avg" }, p.m1, p.m2),
            Layer::Relu { .. } => "relu".into(),
            Layer::Dropout(d) => format!("dropout({})", d.p),
            Layer::Rbf(r) => format!("rbf({})", r.k()),
            Layer::Reshape(r) => format!("reshape({}x{})", r.h, r.w),
        }
    }

    /// Output shape for a given input, or why the input does not fit.
    pub fn output_shape(&self, input: Shape) -> Result<Shape, String> {
        match self {
            Layer::Dense(d) if input.len() == d.inputs => Ok(Shape::flat(d.outputs)),
            Layer::Dense(d) => Err(format!("expects {} inputs, got {input}", d.inputs)),
            Layer::Conv2d(c) if input != c.input => Err(format!("built for {}, got {input}", c.input)),
            Layer::Conv2d(c) if c.k1 == 0 || c.k2 == 0 || c.k1 > input.h || c.k2 > input.w => {
                Err(format!("kernel {}x{} does not fit {}x{} maps", c.k1, c.k2, input.h, input.w))
            }
            Layer::Conv2d(c) => Ok(c.output()),
            Layer::Pool(p) if input != p.input => Err(format!("built for {}, got {input}", p.input)),
            Layer::Pool(p) if p.m1 == 0 || p.m2 == 0 || input.h % p.m1 != 0 || input.w % p.m2 != 0 => {
                Err(format!("{}x{} maps are not divisible by the {}x{} window", input.h, input.w, p.m1, p.m2))
            }
            Layer::Pool(p) => Ok(p.output()),
            Layer::Relu { .. } => Ok(input),
            Layer::Dropout(d) if (0.0..1.0).contains(&d.p) => Ok(input),
            Layer::Dropout(d) => Err(format!("rate {} outside [0, 1)", d.p)),
            Layer::Rbf(r) if input.len() == r.dim => Ok(Shape::flat(r.k())),
            Layer::Rbf(r) => Err(format!("centers have dimension {}, got {input}", r.dim)),
            Layer::Reshape(r) if input.len() == r.inputs && r.inputs <= r.h * r.w => Ok(Shape::maps(1, r.h, r.w)),
            Layer::Reshape(r) => Err(format!("cannot place {input} values in {}x{}", r.h, r.w)),
        }
    }

    pub(crate) fn forward(&mut self, x: &Tensor, mode: &mut Mode) -> Tensor {
        match self {
            Layer::Dense(d) => d.forward(x),
            Layer::Conv2d(c) => c.forward(x),
            Layer::Pool(p) => p.forward(x),
            Layer::Relu { mask } => {
                *mask = x.data.iter().map(|&v| v > 0.0).collect();
                Tensor { shape: x.shape.clone(), data: x.data.iter().map(|&v| v.max(0.0)).collect() }
            }
            Layer::Dropout(d) => d.forward(x, mode),
            Layer::Rbf(r) => r.forward(x),
            Layer::Reshape(r) => r.forward(x),
        }
    }

    /// Gradient w.r.t. the layer input; parameter gradients are stored in the layer.
    pub(crate) fn backward(&mut self, dy: &Tensor, want_dx: bool) -> Tensor {
        match self {
            Layer::Dense(d) => d.backward(dy, want_dx),
            Layer::Conv2d(c) => c.backward(dy, want_dx),
            Layer::Pool(p) => p.backward(dy),
            Layer::Relu { mask } => Tensor {
                shape: dy.shape.clone(),
                data: dy.data.iter().zip(mask.iter()).map(|(&d, &m)| if m { d } else { 0.0 }).collect(),
            },
            Layer::Dropout(d) => d.backward(dy),
            Layer::Rbf(r) => r.backward(dy, want_dx),
            Layer::Reshape(r) => r.backward(dy),
        }
    }

    /// Trainable (weights, gradient) pairs.
    pub(crate) fn params(&mut self) -> Vec<(&mut [f64], &[f64])> {
        match self {
            Layer::Dense(d) => vec![(&mut d.w[..], &d.gw[..]), (&mut d.b[..], &d.gb[..])],
            Layer::Conv2d(c) => vec![(&mut c.w[..], &c.gw[..]), (&mut c.b[..], &c.gb[..])],
            _ => Vec::new(),
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Layer::Dense(d) => d.w.len() + d.b.len(),
            Layer::Conv2d(c) => c.w.len() + c.b.len(),
            _ => 0,
        }
    }
}

/// `y = W·x + b` for one sample; `w` is `outputs × x.len()` row-major.
pub fn dense_forward(x: &[f64], w: &[f64], b: &[f64]) -> Result<Vec<f64>, NnError> {
    if x.is_empty() || w.len() != x.len() * b.len() {
        return Err(NnError::ShapeMismatch(format!("{} weights for {} inputs and {} outputs", w.len(), x.len(), b.len())));
    }
    let mut d = Dense::from_weights(x.len(), b.len(), w.to_vec(), b.to_vec());
    Ok(d.forward(&Tensor { shape: vec![1, x.len()], data: x.to_vec() }).data)
}

/// Valid 2-D cross-correlation of `x` (`d × n1 × n2`) with kernels `k` (`f × d × k1 × k2`).
pub fn conv2d_forward(x: &Tensor, k: &Tensor, b: &[f64]) -> Result<Tensor, NnError> {
    let bad = |why: String| NnError::ShapeMismatch(why);
    let [d, n1, n2] = x.shape[..] else { return Err(bad(format!("input shape {:?} is not d×n1×n2", x.shape))) };
    let [f, kd, k1, k2] = k.shape[..] else { return Err(bad(format!("kernel shape {:?} is not f×d×k1×k2", k.shape))) };
    if kd != d || b.len() != f || k1 == 0 || k2 == 0 || k1 > n1 || k2 > n2 {
        return Err(bad(format!("kernel {:?} does not fit input {:?}", k.shape, x.shape)));
    }
    let mut c = Conv2d::from_weights(Shape::maps(d, n1, n2), f, k1, k2, k.data.clone(), b.to_vec());
    let y = c.forward(&Tensor { shape: vec![1, d, n1, n2], data: x.data.clone() });
    Ok(Tensor { shape: y.shape[1..].to_vec(), data: y.data })
}

/// Non-overlapping `m1 × m2` pooling of `x` (`d × n1 × n2`).
pub fn pool_forward(x: &Tensor, m1: usize, m2: usize, mode: PoolMode) -> Result<Tensor, NnError> {
    let [d, n1, n2] = x.shape[..] else {
        return Err(NnError::ShapeMismatch(format!("input shape {:?} is not d×n1×n2", x.shape)));
    };
    let mut p = Pool::new(Shape::maps(d, n1, n2), m1, m2, mode);
    Layer::Pool(p.clone()).output_shape(p.input).map_err(NnError::ShapeMismatch)?;
    let y = p.forward(&Tensor { shape: vec![1, d, n1, n2], data: x.data.clone() });
    Ok(Tensor { shape: y.shape[1..].to_vec(), data: y.data })
}

/// Gaussian activations of one sample against `centers` (`k × x.len()`).
pub fn rbf_activations(x: &[f64], centers: &[f64], sigmas: &[f64]) -> Vec<f64> {
    let mut r = Rbf::new(x.len(), centers.to_vec(), sigmas.to_vec());
    r.forward(&Tensor { shape: vec![1, x.len()], data: x.to_vec() }).data
}

/// `y = W·φ(x) + b`, `w` is `outputs × k`.
pub fn rbf_forward(x: &[f64], centers: &[f64], sigmas: &[f64], w: &[f64], b: &[f64]) -> Result<Vec<f64>, NnError> {
    dense_forward(&rbf_activations(x, centers, sigmas), w, b)
}

pub fn dropout(x: &[f64], p: f64, mode: &mut Mode) -> Vec<f64> {
    Dropout::new(p).forward(&Tensor { shape: vec![1, x.len()], data: x.to_vec() }, mode).data
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn rand_vec(n: usize, r: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn dense_by_hand() {
        assert_eq!(dense_forward(&[1.0, 2.0], &[1.0, 1.0], &[0.5]).unwrap(), vec![3.5]);
        let eye = [1.0, 0.0, 0.0, 1.0];
        assert_eq!(dense_forward(&[-3.0, 7.0], &eye, &[0.0, 0.0]).unwrap(), vec![-3.0, 7.0]);
        assert!(dense_forward(&[1.0, 2.0], &[1.0], &[0.0]).is_err());
    }

    #[test]
    fn conv_all_ones() {
        let x = Tensor::new(vec![1, 3, 3], vec![1.0; 9]).unwrap();
        let k = Tensor::new(vec![1, 1, 2, 2], vec![1.0; 4]).unwrap();
        let y = conv2d_forward(&x, &k, &[0.0]).unwrap();
        assert_eq!(y.shape, vec![1, 2, 2]);
        assert_eq!(y.data, vec![4.0; 4]);
    }

    #[test]
    fn conv_output_size_follows_valid_rule() {
        let x = Tensor::zeros(vec![1, 7, 6]);
        let k = Tensor::zeros(vec![3, 1, 2, 2]);
        assert_eq!(conv2d_forward(&x, &k, &[0.0; 3]).unwrap().shape, vec![3, 6, 5]);
        let big = Tensor::zeros(vec![3, 1, 8, 2]);
        assert!(conv2d_forward(&x, &big, &[0.0; 3]).is_err());
    }

    #[test]
    fn pooling_by_hand() {
        let x = Tensor::new(vec![1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(pool_forward(&x, 2, 2, PoolMode::Max).unwrap().data, vec![4.0]);
        assert_eq!(pool_forward(&x, 2, 2, PoolMode::Avg).unwrap().data, vec![2.5]);
        let c = Tensor::new(vec![2, 4, 4], vec![-1.5; 32]).unwrap();
        for mode in [PoolMode::Max, PoolMode::Avg] {
            let y = pool_forward(&c, 2, 2, mode).unwrap();
            assert_eq!(y.shape, vec![2, 2, 2]);
            assert!(y.data.iter().all(|&v| v == -1.5));
        }
        assert!(pool_forward(&Tensor::zeros(vec![1, 5, 4]), 2, 2, PoolMode::Max).is_err());
    }

    #[test]
    fn rbf_by_hand() {
        let c = [0.3, -0.2];
        assert_eq!(rbf_activations(&c, &c, &[0.7]), vec![1.0]);
        // ‖x − c‖ = σ
        let phi = rbf_activations(&[0.3 + 0.6, -0.2], &c, &[0.6])[0];
        assert!((phi - (-0.5f64).exp()).abs() < 1e-15);
        assert!((phi - 0.60653).abs() < 1e-5);
        let far = rbf_forward(&[50.0, 50.0], &c, &[1.0], &[1.0], &[0.0]).unwrap()[0];
        assert!(far < 1e-300);
    }

    #[test]
    fn dropout_modes() {
        let x: Vec<f64> = (0..50).map(|v| v as f64 - 20.0).collect();
        let mut r = rng(1);
        assert_eq!(dropout(&x, 0.0, &mut Mode::Train(&mut r)), x);
        assert_eq!(dropout(&x, 0.7, &mut Mode::Eval), x);
        let y = dropout(&x, 0.5, &mut Mode::Train(&mut r));
        assert!(y.iter().zip(&x).all(|(a, b)| *a == 0.0 || *a == 2.0 * b));
    }

    #[test]
    fn dropout_is_unbiased() {
        let n = 100_000;
        let x = vec![1.0; n];
        let mut r = rng(7);
        let y = dropout(&x, 0.3, &mut Mode::Train(&mut r));
        let mean = y.iter().sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
    }

    fn naive_conv(x: &[f64], (d, n1, n2): (usize, usize, usize), k: &[f64], (f, k1, k2): (usize, usize, usize), b: &[f64]) -> Vec<f64> {
        let (o1, o2) = (n1 - k1 + 1, n2 - k2 + 1);
        let mut y = vec![0.0; f * o1 * o2];
        for fi in 0..f {
            for r in 0..o1 {
                for c in 0..o2 {
                    let mut s = b[fi];
                    for di in 0..d {
                        for i in 0..k1 {
                            for j in 0..k2 {
                                s += k[((fi * d + di) * k1 + i) * k2 + j] * x[(di * n1 + r + i) * n2 + c + j];
                            }
                        }
                    }
                    y[(fi * o1 + r) * o2 + c] = s;
                }
            }
        }
        y
    }

    proptest! {
        #[test]
        fn dense_matches_naive_loop(seed in any::<u64>(), n_in in 1usize..20, n_out in 1usize..20) {
            let mut r = rng(seed);
            let (x, w, b) = (rand_vec(n_in, &mut r), rand_vec(n_in * n_out, &mut r), rand_vec(n_out, &mut r));
            let y = dense_forward(&x, &w, &b).unwrap();
            for i in 0..n_out {
                let want: f64 = b[i] + (0..n_in).map(|j| w[i * n_in + j] * x[j]).sum::<f64>();
                prop_assert!((y[i] - want).abs() < 1e-12);
            }
        }

        #[test]
        fn conv_matches_naive_loop(seed in any::<u64>(), d in 1usize..4, f in 1usize..5, n1 in 2usize..8, n2 in 2usize..8, k1 in 1usize..3, k2 in 1usize..3) {
            let mut r = rng(seed);
            let x = rand_vec(d * n1 * n2, &mut r);
            let k = rand_vec(f * d * k1 * k2, &mut r);
            let b = rand_vec(f, &mut r);
            let y = conv2d_forward(&Tensor::new(vec![d, n1, n2], x.clone()).unwrap(), &Tensor::new(vec![f, d, k1, k2], k.clone()).unwrap(), &b).unwrap();
            let want = naive_conv(&x, (d, n1, n2), &k, (f, k1, k2), &b);
            prop_assert_eq!(y.data.len(), want.len());
            for (a, w) in y.data.iter().zip(&want) {
                prop_assert!((a - w).abs() < 1e-12);
            }
        }

        #[test]
        fn batched_conv_equals_per_sample(seed in any::<u64>(), batch in 1usize..5) {
            let mut r = rng(seed);
            let shape = Shape::maps(2, 5, 4);
            let mut layer = Conv2d::new(shape, 3, 2, 2, &mut r);
            let x = rand_vec(batch * shape.len(), &mut r);
            let y = layer.forward(&Tensor::new(vec![batch, 2, 5, 4], x.clone()).unwrap());
            let per = y.row_len();
            for b in 0..batch {
                let one = layer.forward(&Tensor::new(vec![1, 2, 5, 4], x[b * shape.len()..(b + 1) * shape.len()].to_vec()).unwrap());
                prop_assert_eq!(&one.data[..], &y.data[b * per..(b + 1) * per]);
            }
        }
    }
}
