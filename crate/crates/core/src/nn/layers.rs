//! Trainable building blocks with explicit forward and backward passes.
//!
//! Layers never cache their own inputs. The caller keeps whatever the
//! forward pass returned and hands it back to `backward`, which accumulates
//! parameter gradients and returns the gradient with respect to the input.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;

/// A trainable tensor and its accumulated gradient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub value: DenseMatrix,
    #[serde(skip, default = "empty")]
    pub grad: DenseMatrix,
}

fn empty() -> DenseMatrix {
    DenseMatrix::zeros(0, 0)
}

impl Param {
    pub fn new(value: DenseMatrix) -> Self {
        let grad = DenseMatrix::zeros(value.rows(), value.cols());
        Self { value, grad }
    }

    pub fn zero_grad(&mut self) {
        if self.grad.shape() != self.value.shape() {
            self.grad = DenseMatrix::zeros(self.value.rows(), self.value.cols());
        } else {
            self.grad.fill(0.0);
        }
    }

    pub fn len(&self) -> usize {
        self.value.rows() * self.value.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Anything that owns [`Param`]s. Visiting order must be stable: optimiser
/// state and finite-difference checks index parameters by it.
pub trait Parameterized {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut Param));
    fn visit_params_ref(&self, f: &mut dyn FnMut(&Param));

    fn zero_grad(&mut self) {
        self.visit_params(&mut |p| p.zero_grad());
    }

    fn param_count(&self) -> usize {
        let mut n = 0;
        self.visit_params_ref(&mut |p| n += p.len());
        n
    }

    /// Flattened parameter values in visiting order.
    fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.visit_params_ref(&mut |p| out.extend_from_slice(p.value.as_slice()));
        out
    }

    /// Flattened gradients in visiting order.
    fn flat_grads(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.visit_params_ref(&mut |p| out.extend_from_slice(p.grad.as_slice()));
        out
    }

    /// Mutable access to the `index`-th scalar in visiting order.
    fn with_param_entry(&mut self, index: usize, f: &mut dyn FnMut(&mut f64)) {
        let mut offset = 0;
        let mut done = false;
        self.visit_params(&mut |p| {
            if done {
                return;
            }
            let len = p.len();
            if index < offset + len {
                f(&mut p.value.as_mut_slice()[index - offset]);
                done = true;
            }
            offset += len;
        });
        assert!(done, "parameter index {index} out of range");
    }

    fn all_finite(&self) -> bool {
        let mut ok = true;
        self.visit_params_ref(&mut |p| ok &= p.value.is_finite());
        ok
    }
}

/// `y = x W + b` with `W` of shape `in × out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub weight: Param,
    pub bias: Option<Param>,
}

impl Linear {
    pub fn new<R: Rng + ?Sized>(input: usize, output: usize, bias: bool, rng: &mut R) -> Self {
        Self {
            weight: Param::new(DenseMatrix::glorot(input, output, rng)),
            bias: bias.then(|| Param::new(DenseMatrix::zeros(1, output))),
        }
    }

    pub fn from_weights(weight: DenseMatrix, bias: Option<Vec<f64>>) -> Self {
        Self {
            bias: bias.map(|b| {
                let n = b.len();
                Param::new(DenseMatrix::from_vec(1, n, b))
            }),
            weight: Param::new(weight),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.value.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.value.cols()
    }

    pub fn forward(&self, x: &DenseMatrix) -> DenseMatrix {
        let mut y = x.matmul(&self.weight.value);
        self.add_bias(&mut y);
        y
    }

    pub fn add_bias(&self, y: &mut DenseMatrix) {
        if let Some(b) = &self.bias {
            y.add_row_broadcast(b.value.as_slice());
        }
    }

    /// Accumulates `dW = xᵀ dy`, `db = Σ_rows dy`; returns `dx = dy Wᵀ`.
    pub fn backward(&mut self, x: &DenseMatrix, dy: &DenseMatrix) -> DenseMatrix {
        self.accumulate(x, dy);
        dy.matmul_t(&self.weight.value)
    }

    /// Parameter gradients only, for layers whose input needs no gradient.
    pub fn accumulate(&mut self, x: &DenseMatrix, dy: &DenseMatrix) {
        self.weight.grad.add_assign(&x.t_matmul(dy));
        self.accumulate_bias(dy);
    }

    pub fn accumulate_bias(&mut self, dy: &DenseMatrix) {
        if let Some(b) = &mut self.bias {
            for (g, s) in b.grad.as_mut_slice().iter_mut().zip(dy.column_sums()) {
                *g += s;
            }
        }
    }
}

impl Parameterized for Linear {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut Param)) {
        f(&mut self.weight);
        if let Some(b) = &mut self.bias {
            f(b);
        }
    }

    fn visit_params_ref(&self, f: &mut dyn FnMut(&Param)) {
        f(&self.weight);
        if let Some(b) = &self.bias {
            f(b);
        }
    }
}

pub fn relu(x: &DenseMatrix) -> DenseMatrix {
    x.map(|v| v.max(0.0))
}

/// Gradient of ReLU given the pre-activation input.
pub fn relu_backward(pre: &DenseMatrix, dy: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_fn(dy.rows(), dy.cols(), |r, c| {
        if pre.get(r, c) > 0.0 {
            dy.get(r, c)
        } else {
            0.0
        }
    })
}

/// Inverted-dropout mask with entries `0` or `1 / (1 - rate)`. Rate 0
/// yields all ones and consumes no randomness.
pub fn dropout_mask<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rate: f64,
    rng: &mut R,
) -> DenseMatrix {
    assert!((0.0..1.0).contains(&rate), "dropout rate must be in [0, 1)");
    if rate == 0.0 {
        return DenseMatrix::filled(rows, cols, 1.0);
    }
    let keep = 1.0 / (1.0 - rate);
    DenseMatrix::from_fn(rows, cols, |_, _| {
        if rng.random::<f64>() < rate {
            0.0
        } else {
            keep
        }
    })
}

/// Batch normalisation over rows (nodes), one statistic per column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchNorm1d {
    pub gamma: Param,
    pub beta: Param,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub momentum: f64,
    pub eps: f64,
}

#[derive(Debug, Clone)]
pub struct BatchNormCache {
    xhat: DenseMatrix,
    inv_std: Vec<f64>,
}

impl BatchNorm1d {
    pub fn new(width: usize) -> Self {
        Self {
            gamma: Param::new(DenseMatrix::filled(1, width, 1.0)),
            beta: Param::new(DenseMatrix::zeros(1, width)),
            running_mean: vec![0.0; width],
            running_var: vec![1.0; width],
            momentum: 0.1,
            eps: 1e-5,
        }
    }

    fn affine(&self, xhat: &DenseMatrix) -> DenseMatrix {
        let g = self.gamma.value.as_slice();
        let b = self.beta.value.as_slice();
        DenseMatrix::from_fn(xhat.rows(), xhat.cols(), |r, c| {
            xhat.get(r, c) * g[c] + b[c]
        })
    }

    /// Normalises with batch statistics and updates the running averages.
    pub fn forward_train(&mut self, x: &DenseMatrix) -> (DenseMatrix, BatchNormCache) {
        let n = x.rows() as f64;
        let mean: Vec<f64> = x.column_sums().into_iter().map(|s| s / n).collect();
        let mut var = vec![0.0; x.cols()];
        for r in 0..x.rows() {
            for (c, v) in x.row(r).iter().enumerate() {
                let d = v - mean[c];
                var[c] += d * d;
            }
        }
        var.iter_mut().for_each(|v| *v /= n);
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + self.eps).sqrt()).collect();
        let xhat = DenseMatrix::from_fn(x.rows(), x.cols(), |r, c| {
            (x.get(r, c) - mean[c]) * inv_std[c]
        });
        let unbias = if x.rows() > 1 { n / (n - 1.0) } else { 1.0 };
        for c in 0..x.cols() {
            self.running_mean[c] =
                (1.0 - self.momentum) * self.running_mean[c] + self.momentum * mean[c];
            self.running_var[c] =
                (1.0 - self.momentum) * self.running_var[c] + self.momentum * var[c] * unbias;
        }
        (self.affine(&xhat), BatchNormCache { xhat, inv_std })
    }

    pub fn forward_eval(&self, x: &DenseMatrix) -> DenseMatrix {
        let xhat = DenseMatrix::from_fn(x.rows(), x.cols(), |r, c| {
            (x.get(r, c) - self.running_mean[c]) / (self.running_var[c] + self.eps).sqrt()
        });
        self.affine(&xhat)
    }

    pub fn backward(&mut self, cache: &BatchNormCache, dy: &DenseMatrix) -> DenseMatrix {
        let (rows, cols) = dy.shape();
        let n = rows as f64;
        let gamma = self.gamma.value.as_slice().to_vec();
        let mut sum_dxhat = vec![0.0; cols];
        let mut sum_dxhat_xhat = vec![0.0; cols];
        for r in 0..rows {
            for c in 0..cols {
                let g = dy.get(r, c);
                let xh = cache.xhat.get(r, c);
                self.gamma.grad.add_at(0, c, g * xh);
                self.beta.grad.add_at(0, c, g);
                let dxh = g * gamma[c];
                sum_dxhat[c] += dxh;
                sum_dxhat_xhat[c] += dxh * xh;
            }
        }
        DenseMatrix::from_fn(rows, cols, |r, c| {
            let dxh = dy.get(r, c) * gamma[c];
            cache.inv_std[c] / n
                * (n * dxh - sum_dxhat[c] - cache.xhat.get(r, c) * sum_dxhat_xhat[c])
        })
    }
}

impl Parameterized for BatchNorm1d {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut Param)) {
        f(&mut self.gamma);
        f(&mut self.beta);
    }

    fn visit_params_ref(&self, f: &mut dyn FnMut(&Param)) {
        f(&self.gamma);
        f(&self.beta);
    }
}

/// Mean softmax cross-entropy over the rows listed in `idx`.
///
/// Returns the loss and `∂loss/∂logits` (zero on rows outside `idx`).
pub fn softmax_cross_entropy(
    logits: &DenseMatrix,
    labels: &[usize],
    idx: &[usize],
) -> (f64, DenseMatrix) {
    let mut grad = DenseMatrix::zeros(logits.rows(), logits.cols());
    let m = idx.len().max(1) as f64;
    let mut mean = 0.0;
    for (k, &i) in idx.iter().enumerate() {
        let row = logits.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|v| (v - max).exp()).sum();
        let log_sum = sum.ln();
        let loss = log_sum - (row[labels[i]] - max);
        let lse = max + log_sum;
        // running mean keeps identical per-row losses exact
        mean += (loss - mean) / (k + 1) as f64;
        for (c, v) in row.iter().enumerate() {
            let p = (v - lse).exp();
            let target = if c == labels[i] { 1.0 } else { 0.0 };
            grad.set(i, c, (p - target) / m);
        }
    }
    (mean, grad)
}

pub fn accuracy(logits: &DenseMatrix, labels: &[usize], idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return 0.0;
    }
    let pred = logits.argmax_rows();
    idx.iter().filter(|&&i| pred[i] == labels[i]).count() as f64 / idx.len() as f64
}
