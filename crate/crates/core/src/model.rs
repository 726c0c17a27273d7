//! The ScaleNet architecture.
//!
//! Each layer runs a set of bidirectional aggregation branches. A branch
//! mixes two opposite-direction matrices `M`, `N`:
//!
//! ```text
//! AGG-B_α(M, N, X) = (1+α)α · AGG(M, X) + (1+α)(1−α) · AGG(N, X)
//! AGG-B_2(M, N, X) = AGG(M ∪ N, X)
//! AGG-B_3(M, N, X) = AGG(M ∩ N, X)
//! ```
//!
//! Branch outputs are merged by COMB1 (sum, concat + projection, or max),
//! optionally followed by batch norm, ReLU and dropout. COMB2 fuses the
//! per-layer outputs before a linear classifier.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, SelfLoopPolicy, SparseMatrix};
use crate::nn::{
    dropout_mask, relu, relu_backward, BatchNorm1d, BatchNormCache, Linear, Param, Parameterized,
};
use crate::scale::{build_scaled_set, ScaledGraphSet};

/// Branch mixing parameter. `2` and `3` select the union and intersection
/// modes; any other value uses the polynomial weighting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MixAlpha(pub f64);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MixMode {
    Polynomial { m: f64, n: f64 },
    Union,
    Intersection,
}

impl MixAlpha {
    /// `((1+α)α, (1+α)(1−α))`.
    pub fn coefficients(self) -> (f64, f64) {
        let a = self.0;
        ((1.0 + a) * a, (1.0 + a) * (1.0 - a))
    }

    pub fn mode(self) -> MixMode {
        if self.0 == 2.0 {
            MixMode::Union
        } else if self.0 == 3.0 {
            MixMode::Intersection
        } else {
            let (m, n) = self.coefficients();
            MixMode::Polynomial { m, n }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchSpec {
    /// `(M, N)` scaled-matrix names, e.g. `("AA", "A^TA^T")`.
    pub pair: (String, String),
    pub alpha: MixAlpha,
    #[serde(default = "default_policy")]
    pub self_loops: SelfLoopPolicy,
}

fn default_policy() -> SelfLoopPolicy {
    SelfLoopPolicy::Keep
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comb1 {
    Sum,
    JkCat,
    JkMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comb2 {
    Last,
    Sum,
    JkCat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggKind {
    Gcn,
    Sage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleNetConfig {
    pub branches: Vec<BranchSpec>,
    pub comb1: Comb1,
    pub comb2: Comb2,
    pub layers: usize,
    pub hidden: usize,
    pub agg: AggKind,
    #[serde(default)]
    pub batchnorm: bool,
    #[serde(default = "yes")]
    pub activation: bool,
    #[serde(default)]
    pub dropout: f64,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default)]
    pub weight_decay: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    /// Early-stopping patience in epochs.
    #[serde(default = "default_patience")]
    pub patience: usize,
    /// SAGE only: normalise the neighbour term.
    #[serde(default)]
    pub sage_normalized: bool,
    #[serde(default)]
    pub seed: u64,
}

fn yes() -> bool {
    true
}
fn default_lr() -> f64 {
    0.01
}
fn default_epochs() -> usize {
    200
}
fn default_patience() -> usize {
    50
}

impl ScaleNetConfig {
    /// A one-branch GCN config, handy for tests and baselines.
    pub fn single_branch(m: &str, n: &str, alpha: f64, self_loops: SelfLoopPolicy) -> Self {
        Self {
            branches: vec![BranchSpec {
                pair: (m.to_string(), n.to_string()),
                alpha: MixAlpha(alpha),
                self_loops,
            }],
            comb1: Comb1::Sum,
            comb2: Comb2::Last,
            layers: 1,
            hidden: 16,
            agg: AggKind::Gcn,
            batchnorm: false,
            activation: true,
            dropout: 0.0,
            lr: default_lr(),
            weight_decay: 5e-4,
            epochs: default_epochs(),
            patience: default_patience(),
            sage_normalized: false,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers < 1 {
            return Err(Error::invalid("layers must be >= 1"));
        }
        if self.hidden < 1 {
            return Err(Error::invalid("hidden must be >= 1"));
        }
        if self.branches.is_empty() {
            return Err(Error::invalid("at least one branch is required"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::invalid(format!(
                "dropout {} not in [0, 1)",
                self.dropout
            )));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid("lr must be positive"));
        }
        for b in &self.branches {
            if b.pair.0 == b.pair.1 {
                return Err(Error::invalid(format!(
                    "branch pair repeats `{}`",
                    b.pair.0
                )));
            }
            if !b.alpha.0.is_finite() {
                return Err(Error::invalid("alpha must be finite"));
            }
        }
        Ok(())
    }

    /// Width fed to the classifier.
    pub fn feature_width(&self) -> usize {
        match self.comb2 {
            Comb2::JkCat => self.hidden * self.layers,
            _ => self.hidden,
        }
    }
}

/// A propagation operator and its transpose for the backward pass.
#[derive(Debug, Clone)]
struct Operator {
    fwd: SparseMatrix<f64>,
    bwd: SparseMatrix<f64>,
}

impl Operator {
    fn new(support: &SparseMatrix<u64>, policy: SelfLoopPolicy, opts: AggOptions) -> Result<Self> {
        let m = support.binarize().set_self_loops(policy)?;
        let fwd = match (opts.kind, opts.sage_normalized) {
            (AggKind::Sage, false) => m.to_f64(),
            _ => m.normalize_sym().into_sparse(),
        };
        let bwd = fwd.transpose();
        Ok(Self { fwd, bwd })
    }
}

#[derive(Debug, Clone)]
enum BranchOps {
    Mix {
        cm: f64,
        cn: f64,
        m: Operator,
        n: Operator,
    },
    Combined(Operator),
}

/// How `AGG` is evaluated inside a branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggOptions {
    pub kind: AggKind,
    pub sage_normalized: bool,
}

impl BranchOps {
    fn new(
        alpha: MixAlpha,
        m: &SparseMatrix<u64>,
        n: &SparseMatrix<u64>,
        policy: SelfLoopPolicy,
        opts: AggOptions,
    ) -> Result<Self> {
        Ok(match alpha.mode() {
            MixMode::Polynomial { m: cm, n: cn } => BranchOps::Mix {
                cm,
                cn,
                m: Operator::new(m, policy, opts)?,
                n: Operator::new(n, policy, opts)?,
            },
            // support changes, so normalisation is recomputed on the result
            MixMode::Union => BranchOps::Combined(Operator::new(&m.union(n)?, policy, opts)?),
            MixMode::Intersection => {
                BranchOps::Combined(Operator::new(&m.intersect(n)?, policy, opts)?)
            }
        })
    }
}

/// Propagation operators for every branch of a config on one graph.
#[derive(Debug, Clone)]
pub struct PreparedGraph {
    n: usize,
    branches: Vec<BranchOps>,
}

impl PreparedGraph {
    pub fn new(g: &DirectedGraph, cfg: &ScaleNetConfig) -> Result<Self> {
        cfg.validate()?;
        let sets: [ScaledGraphSet; 2] = [
            build_scaled_set(g, 1, SelfLoopPolicy::Keep)?,
            build_scaled_set(g, 2, SelfLoopPolicy::Keep)?,
        ];
        let lookup = |name: &str| {
            sets.iter()
                .find_map(|s| s.member(name))
                .ok_or_else(|| Error::UnknownMatrix(name.to_string()))
        };
        let opts = AggOptions {
            kind: cfg.agg,
            sage_normalized: cfg.sage_normalized,
        };
        let branches = cfg
            .branches
            .iter()
            .map(|b| {
                BranchOps::new(
                    b.alpha,
                    lookup(&b.pair.0)?,
                    lookup(&b.pair.1)?,
                    b.self_loops,
                    opts,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n: g.n(), branches })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Multiplies both mixing coefficients of every polynomial branch by `c`.
    pub fn scale_coefficients(&self, c: f64) -> Self {
        let mut out = self.clone();
        for b in &mut out.branches {
            if let BranchOps::Mix { cm, cn, .. } = b {
                *cm *= c;
                *cn *= c;
            }
        }
        out
    }
}

/// Weights of one `AGG(P, X) = P X W + b (+ X W_self for SAGE)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggParams {
    pub neigh: Linear,
    pub self_term: Option<Linear>,
}

impl AggParams {
    fn new(input: usize, output: usize, kind: AggKind, rng: &mut ChaCha8Rng) -> Self {
        let neigh = Linear::new(input, output, true, rng);
        let self_term = (kind == AggKind::Sage).then(|| Linear::new(input, output, false, rng));
        Self { neigh, self_term }
    }

    fn forward(&self, op: &Operator, x: &DenseMatrix) -> DenseMatrix {
        let mut y = op.fwd.mul_dense(&x.matmul(&self.neigh.weight.value));
        self.neigh.add_bias(&mut y);
        if let Some(s) = &self.self_term {
            y.add_assign(&x.matmul(&s.weight.value));
        }
        y
    }

    fn backward(&mut self, op: &Operator, x: &DenseMatrix, dy: &DenseMatrix) -> DenseMatrix {
        let dz = op.bwd.mul_dense(dy);
        self.neigh.weight.grad.add_assign(&x.t_matmul(&dz));
        self.neigh.accumulate_bias(dy);
        let mut dx = dz.matmul_t(&self.neigh.weight.value);
        if let Some(s) = &mut self.self_term {
            dx.add_assign(&s.backward(x, dy));
        }
        dx
    }
}

impl Parameterized for AggParams {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut Param)) {
        self.neigh.visit_params(f);
        if let Some(s) = &mut self.self_term {
            s.visit_params(f);
        }
    }

    fn visit_params_ref(&self, f: &mut dyn FnMut(&Param)) {
        self.neigh.visit_params_ref(f);
        if let Some(s) = &self.self_term {
            s.visit_params_ref(f);
        }
    }
}

/// Weights of one AGG-B branch. Union/intersection modes use `m` only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchParams {
    pub m: AggParams,
    pub n: AggParams,
}

impl BranchParams {
    pub fn new(input: usize, output: usize, kind: AggKind, rng: &mut ChaCha8Rng) -> Self {
        let m = AggParams::new(input, output, kind, rng);
        let n = AggParams::new(input, output, kind, rng);
        Self { m, n }
    }

    fn forward(&self, ops: &BranchOps, x: &DenseMatrix) -> DenseMatrix {
        match ops {
            BranchOps::Mix { cm, cn, m, n } => {
                let mut out = DenseMatrix::zeros(x.rows(), self.m.neigh.output_dim());
                if *cm != 0.0 {
                    out.add_scaled_assign(&self.m.forward(m, x), *cm);
                }
                if *cn != 0.0 {
                    out.add_scaled_assign(&self.n.forward(n, x), *cn);
                }
                out
            }
            BranchOps::Combined(op) => self.m.forward(op, x),
        }
    }

    fn backward(&mut self, ops: &BranchOps, x: &DenseMatrix, dy: &DenseMatrix) -> DenseMatrix {
        match ops {
            BranchOps::Mix { cm, cn, m, n } => {
                let mut dx = DenseMatrix::zeros(x.rows(), x.cols());
                if *cm != 0.0 {
                    dx.add_assign(&self.m.backward(m, x, &dy.scale(*cm)));
                }
                if *cn != 0.0 {
                    dx.add_assign(&self.n.backward(n, x, &dy.scale(*cn)));
                }
                dx
            }
            BranchOps::Combined(op) => self.m.backward(op, x, dy),
        }
    }
}

impl Parameterized for BranchParams {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut Param)) {
        self.m.visit_params(f);
        self.n.visit_params(f);
    }

    fn visit_params_ref(&self, f: &mut dyn FnMut(&Param)) {
        self.m.visit_params_ref(f);
        self.n.visit_params_ref(f);
    }
}

/// Evaluates one AGG-B block on explicit supports. `params.m` weights the
/// `M` side (and the combined matrix in union/intersection modes).
pub fn agg_b(
    alpha: MixAlpha,
    m: &SparseMatrix<u64>,
    n: &SparseMatrix<u64>,
    self_loops: SelfLoopPolicy,
    opts: AggOptions,
    x: &DenseMatrix,
    params: &BranchParams,
) -> Result<DenseMatrix> {
    let ops = BranchOps::new(alpha, m, n, self_loops, opts)?;
    Ok(params.forward(&ops, x))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub branches: Vec<BranchParams>,
    /// JK-concat projection back to the hidden width.
    pub proj: Option<Linear>,
    pub bn: Option<BatchNorm1d>,
}

impl Parameterized for LayerParams {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut Param)) {
        for b in &mut self.branches {
            b.visit_params(f);
        }
        if let Some(p) = &mut self.proj {
            p.visit_params(f);
        }
        if let Some(bn) = &mut self.bn {
            bn.visit_params(f);
        }
    }

    fn visit_params_ref(&self, f: &mut dyn FnMut(&Param)) {
        for b in &self.branches {
            b.visit_params_ref(f);
        }
        if let Some(p) = &self.proj {
            p.visit_params_ref(f);
        }
        if let Some(bn) = &self.bn {
            bn.visit_params_ref(f);
        }
    }
}

/// Whether a forward pass trains (batch statistics, dropout) or evaluates.
pub enum Mode<'a> {
    Train(&'a mut ChaCha8Rng),
    Eval,
}

#[derive(Debug, Clone)]
pub struct LayerCache {
    input: DenseMatrix,
    branch_outs: Vec<DenseMatrix>,
    concat: Option<DenseMatrix>,
    /// JK-max winner per element.
    winners: Option<Vec<usize>>,
    bn: Option<BatchNormCache>,
    pre_activation: DenseMatrix,
    mask: Option<DenseMatrix>,
}

#[derive(Debug, Clone)]
pub struct ForwardCache {
    layers: Vec<LayerCache>,
    features: DenseMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutput {
    pub logits: DenseMatrix,
    /// Per-layer outputs; empty when COMB2 is `last`.
    pub hidden: Vec<DenseMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleNet {
    pub cfg: ScaleNetConfig,
    pub layers: Vec<LayerParams>,
    pub classifier: Linear,
}

impl ScaleNet {
    /// Parameters are initialised from `cfg.seed`.
    pub fn new(cfg: &ScaleNetConfig, input_dim: usize, classes: usize) -> Result<Self> {
        cfg.validate()?;
        if input_dim == 0 || classes == 0 {
            return Err(Error::invalid(
                "input width and class count must be positive",
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let b = cfg.branches.len();
        let layers = (0..cfg.layers)
            .map(|l| {
                let input = if l == 0 { input_dim } else { cfg.hidden };
                let branches = (0..b)
                    .map(|_| BranchParams::new(input, cfg.hidden, cfg.agg, &mut rng))
                    .collect();
                let proj = (cfg.comb1 == Comb1::JkCat)
                    .then(|| Linear::new(b * cfg.hidden, cfg.hidden, true, &mut rng));
                let bn = cfg.batchnorm.then(|| BatchNorm1d::new(cfg.hidden));
                LayerParams { branches, proj, bn }
            })
            .collect();
        let classifier = Linear::new(cfg.feature_width(), classes, true, &mut rng);
        Ok(Self {
            cfg: cfg.clone(),
            layers,
            classifier,
        })
    }

    fn check_inputs(&self, graph: &PreparedGraph, x: &DenseMatrix) -> Result<()> {
        if graph.branches.len() != self.cfg.branches.len() {
            return Err(Error::invalid(
                "prepared graph was built for a different config",
            ));
        }
        if x.rows() != graph.n {
            return Err(Error::ShapeMismatch {
                op: "scalenet features",
                left: (graph.n, graph.n),
                right: x.shape(),
            });
        }
        let expect = self.layers[0].branches[0].m.neigh.input_dim();
        if x.cols() != expect {
            return Err(Error::ShapeMismatch {
                op: "scalenet input width",
                left: (x.rows(), expect),
                right: x.shape(),
            });
        }
        Ok(())
    }

    /// One layer: branches, COMB1, then the optional norm/activation/dropout.
    pub fn layer_forward(
        &mut self,
        l: usize,
        graph: &PreparedGraph,
        x: &DenseMatrix,
        mode: &mut Mode<'_>,
    ) -> (DenseMatrix, LayerCache) {
        let cfg = &self.cfg;
        let layer = &mut self.layers[l];
        let branch_outs: Vec<DenseMatrix> = layer
            .branches
            .iter()
            .zip(&graph.branches)
            .map(|(p, ops)| p.forward(ops, x))
            .collect();
        let mut concat = None;
        let mut winners = None;
        let combined = match cfg.comb1 {
            Comb1::Sum => {
                let mut acc = branch_outs[0].clone();
                for b in &branch_outs[1..] {
                    acc.add_assign(b);
                }
                acc
            }
            Comb1::JkCat => {
                let parts: Vec<&DenseMatrix> = branch_outs.iter().collect();
                let cat = DenseMatrix::hconcat(&parts);
                let out = layer
                    .proj
                    .as_ref()
                    .expect("jk_cat projection")
                    .forward(&cat);
                concat = Some(cat);
                out
            }
            Comb1::JkMax => {
                let mut acc = branch_outs[0].clone();
                let mut win = vec![0usize; acc.as_slice().len()];
                for (b, out) in branch_outs.iter().enumerate().skip(1) {
                    for (k, (a, v)) in acc
                        .as_mut_slice()
                        .iter_mut()
                        .zip(out.as_slice())
                        .enumerate()
                    {
                        if *v > *a {
                            *a = *v;
                            win[k] = b;
                        }
                    }
                }
                winners = Some(win);
                acc
            }
        };
        let (normed, bn_cache) = match (&mut layer.bn, &mut *mode) {
            (Some(bn), Mode::Train(_)) => {
                let (y, c) = bn.forward_train(&combined);
                (y, Some(c))
            }
            (Some(bn), Mode::Eval) => (bn.forward_eval(&combined), None),
            (None, _) => (combined, None),
        };
        let activated = if cfg.activation {
            relu(&normed)
        } else {
            normed.clone()
        };
        let (out, mask) = match &mut *mode {
            Mode::Train(rng) if cfg.dropout > 0.0 => {
                let mask =
                    dropout_mask(activated.rows(), activated.cols(), cfg.dropout, &mut **rng);
                (activated.hadamard(&mask), Some(mask))
            }
            _ => (activated, None),
        };
        let cache = LayerCache {
            input: x.clone(),
            branch_outs,
            concat,
            winners,
            bn: bn_cache,
            pre_activation: normed,
            mask,
        };
        (out, cache)
    }

    /// Full forward pass. In [`Mode::Train`] batch-norm statistics are
    /// updated and dropout is sampled from the supplied generator.
    pub fn forward(
        &mut self,
        graph: &PreparedGraph,
        x: &DenseMatrix,
        mut mode: Mode<'_>,
    ) -> Result<(ModelOutput, ForwardCache)> {
        self.check_inputs(graph, x)?;
        let mut h = x.clone();
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut outputs = Vec::with_capacity(self.layers.len());
        for l in 0..self.layers.len() {
            let (out, cache) = self.layer_forward(l, graph, &h, &mut mode);
            caches.push(cache);
            outputs.push(out.clone());
            h = out;
        }
        let features = match self.cfg.comb2 {
            Comb2::Last => h,
            Comb2::Sum => {
                let mut acc = outputs[0].clone();
                for o in &outputs[1..] {
                    acc.add_assign(o);
                }
                acc
            }
            Comb2::JkCat => DenseMatrix::hconcat(&outputs.iter().collect::<Vec<_>>()),
        };
        let logits = self.classifier.forward(&features);
        let hidden = if self.cfg.comb2 == Comb2::Last {
            Vec::new()
        } else {
            outputs
        };
        Ok((
            ModelOutput { logits, hidden },
            ForwardCache {
                layers: caches,
                features,
            },
        ))
    }

    /// Inference with running batch-norm statistics and no dropout.
    pub fn predict(&self, graph: &PreparedGraph, x: &DenseMatrix) -> Result<ModelOutput> {
        let mut shadow = self.clone();
        Ok(shadow.forward(graph, x, Mode::Eval)?.0)
    }

    /// Accumulates gradients of every parameter given `∂loss/∂logits`.
    pub fn backward(&mut self, graph: &PreparedGraph, cache: &ForwardCache, dlogits: &DenseMatrix) {
        let dfeat = self.classifier.backward(&cache.features, dlogits);
        let nl = self.layers.len();
        let h = self.cfg.hidden;
        let mut d_out: Vec<DenseMatrix> = (0..nl).map(|_| DenseMatrix::zeros(graph.n, h)).collect();
        match self.cfg.comb2 {
            Comb2::Last => d_out[nl - 1] = dfeat,
            Comb2::Sum => d_out.iter_mut().for_each(|d| *d = dfeat.clone()),
            Comb2::JkCat => d_out = dfeat.hsplit(&vec![h; nl]),
        }
        for l in (0..nl).rev() {
            let dx = self.layer_backward(l, graph, &cache.layers[l], &d_out[l]);
            if l > 0 {
                d_out[l - 1].add_assign(&dx);
            }
        }
    }

    /// Backward through one layer; returns the gradient w.r.t. its input.
    pub fn layer_backward(
        &mut self,
        l: usize,
        graph: &PreparedGraph,
        cache: &LayerCache,
        dy: &DenseMatrix,
    ) -> DenseMatrix {
        let cfg = &self.cfg;
        let layer = &mut self.layers[l];
        let mut d = match &cache.mask {
            Some(mask) => dy.hadamard(mask),
            None => dy.clone(),
        };
        if cfg.activation {
            d = relu_backward(&cache.pre_activation, &d);
        }
        if let (Some(bn), Some(bc)) = (&mut layer.bn, &cache.bn) {
            d = bn.backward(bc, &d);
        }
        let d_branches: Vec<DenseMatrix> = match cfg.comb1 {
            Comb1::Sum => vec![d; cache.branch_outs.len()],
            Comb1::JkCat => {
                let cat = cache.concat.as_ref().expect("cached concat");
                let dcat = layer
                    .proj
                    .as_mut()
                    .expect("jk_cat projection")
                    .backward(cat, &d);
                dcat.hsplit(&vec![cfg.hidden; cache.branch_outs.len()])
            }
            Comb1::JkMax => {
                let win = cache.winners.as_ref().expect("cached winners");
                (0..cache.branch_outs.len())
                    .map(|b| {
                        let mut g = d.clone();
                        for (k, v) in g.as_mut_slice().iter_mut().enumerate() {
                            if win[k] != b {
                                *v = 0.0;
                            }
                        }
                        g
                    })
                    .collect()
            }
        };
        let mut dx = DenseMatrix::zeros(cache.input.rows(), cache.input.cols());
        for ((p, ops), db) in layer
            .branches
            .iter_mut()
            .zip(&graph.branches)
            .zip(&d_branches)
        {
            dx.add_assign(&p.backward(ops, &cache.input, db));
        }
        dx
    }
}

impl Parameterized for ScaleNet {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut Param)) {
        for l in &mut self.layers {
            l.visit_params(f);
        }
        self.classifier.visit_params(f);
    }

    fn visit_params_ref(&self, f: &mut dyn FnMut(&Param)) {
        for l in &self.layers {
            l.visit_params_ref(f);
        }
        self.classifier.visit_params_ref(f);
    }
}
