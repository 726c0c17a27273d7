//! Layer-wise message-passing filters.
//!
//! Features are row-major (`n × d`), so a filter reads `P · X · W` where
//! `P` is the propagation matrix derived from the adjacency:
//!
//! | kind  | output                                         | weights |
//! |-------|------------------------------------------------|---------|
//! | MLP   | `X W`                                          | 1       |
//! | GCN   | `Ã X W`                                        | 1       |
//! | SAGE  | `A X W₁ + X W₂` (or `Ã X W₁ + X W₂`)           | 2       |
//! | GAT   | `(W_att ⊙ A) X W`                              | 1       |
//! | CHEB  | `Σ_k T_k X W_k`, `T₁ = I`, `T₂ = I − Ã`        | K       |
//! | APPNP | `P_k = (1−α) Ã P_{k−1} + α X W_{k+1}`, `P₀ = X W₁` | K + 1 |
//!
//! `A` is the binarised adjacency after the self-loop policy and `Ã` its
//! symmetric normalisation.

use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::graph::{SelfLoopPolicy, SparseMatrix};
use crate::nn::layers::relu;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Mlp,
    Gcn,
    Sage,
    Gat,
    Cheb,
    Appnp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterSpec {
    pub kind: FilterKind,
    pub self_loops: SelfLoopPolicy,
    /// Polynomial order `K` for CHEB and APPNP.
    pub order: usize,
    /// APPNP teleport probability.
    pub teleport_alpha: Option<f64>,
    /// Caller-supplied attention weights for GAT.
    pub attention: Option<SparseMatrix<f64>>,
    /// SAGE only: normalise the neighbour term.
    pub sage_normalized: bool,
}

impl FilterSpec {
    fn base(kind: FilterKind, self_loops: SelfLoopPolicy) -> Self {
        Self {
            kind,
            self_loops,
            order: 1,
            teleport_alpha: None,
            attention: None,
            sage_normalized: false,
        }
    }

    pub fn mlp() -> Self {
        Self::base(FilterKind::Mlp, SelfLoopPolicy::Keep)
    }

    pub fn gcn(self_loops: SelfLoopPolicy) -> Self {
        Self::base(FilterKind::Gcn, self_loops)
    }

    pub fn sage(self_loops: SelfLoopPolicy, normalized: bool) -> Self {
        Self {
            sage_normalized: normalized,
            ..Self::base(FilterKind::Sage, self_loops)
        }
    }

    pub fn gat(attention: SparseMatrix<f64>, self_loops: SelfLoopPolicy) -> Self {
        Self {
            attention: Some(attention),
            ..Self::base(FilterKind::Gat, self_loops)
        }
    }

    pub fn cheb(order: usize) -> Self {
        Self {
            order,
            ..Self::base(FilterKind::Cheb, SelfLoopPolicy::Keep)
        }
    }

    pub fn appnp(order: usize, teleport_alpha: f64, self_loops: SelfLoopPolicy) -> Self {
        Self {
            order,
            teleport_alpha: Some(teleport_alpha),
            ..Self::base(FilterKind::Appnp, self_loops)
        }
    }

    /// Number of weight matrices `filter_forward` expects.
    pub fn weight_count(&self) -> usize {
        match self.kind {
            FilterKind::Mlp | FilterKind::Gcn | FilterKind::Gat => 1,
            FilterKind::Sage => 2,
            FilterKind::Cheb => self.order,
            FilterKind::Appnp => self.order + 1,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if matches!(self.kind, FilterKind::Cheb | FilterKind::Appnp) && self.order < 1 {
            return Err(Error::invalid("filter order K must be >= 1"));
        }
        match (self.kind, self.teleport_alpha) {
            (FilterKind::Appnp, Some(a)) if a > 0.0 && a < 1.0 => {}
            (FilterKind::Appnp, _) => {
                return Err(Error::invalid("APPNP needs teleport_alpha in (0, 1)"))
            }
            (_, Some(_)) => return Err(Error::invalid("teleport_alpha is only valid for APPNP")),
            _ => {}
        }
        match (self.kind, &self.attention) {
            (FilterKind::Gat, Some(att)) if att.shape() == (n, n) => {}
            (FilterKind::Gat, Some(att)) => {
                return Err(Error::ShapeMismatch {
                    op: "gat attention",
                    left: att.shape(),
                    right: (n, n),
                })
            }
            (FilterKind::Gat, None) => return Err(Error::invalid("GAT needs attention weights")),
            (_, Some(_)) => return Err(Error::invalid("attention weights are only valid for GAT")),
            _ => {}
        }
        Ok(())
    }
}

/// One propagation step of the filter described by `spec`.
pub fn filter_forward(
    spec: &FilterSpec,
    adj: &SparseMatrix<u64>,
    x: &DenseMatrix,
    weights: &[DenseMatrix],
) -> Result<DenseMatrix> {
    let n = adj.rows();
    spec.validate(n)?;
    if x.rows() != n {
        return Err(Error::ShapeMismatch {
            op: "filter features",
            left: adj.shape(),
            right: x.shape(),
        });
    }
    if weights.len() != spec.weight_count() {
        return Err(Error::invalid(format!(
            "{:?} filter expects {} weight matrices, got {}",
            spec.kind,
            spec.weight_count(),
            weights.len()
        )));
    }
    for w in weights {
        if w.rows() != x.cols() {
            return Err(Error::ShapeMismatch {
                op: "filter weight",
                left: x.shape(),
                right: w.shape(),
            });
        }
    }
    let base = adj.binarize().set_self_loops(spec.self_loops)?;
    let norm = base.normalize_sym();
    let xw = |k: usize| x.matmul(&weights[k]);
    Ok(match spec.kind {
        FilterKind::Mlp => xw(0),
        FilterKind::Gcn => norm.mul_dense(&xw(0)),
        FilterKind::Sage => {
            let neigh = if spec.sage_normalized {
                norm.mul_dense(&xw(0))
            } else {
                base.to_f64().mul_dense(&xw(0))
            };
            neigh.add(&xw(1))
        }
        FilterKind::Gat => {
            let att = spec.attention.as_ref().expect("validated");
            let weighted = base.with_values(|i, j| att.get(i, j));
            weighted.mul_dense(&xw(0))
        }
        FilterKind::Cheb => {
            // T_{k+2} X = 2 (I - Ã) T_{k+1} X - T_k X
            let lap = |m: &DenseMatrix| m.sub(&norm.mul_dense(m));
            let mut prev = x.clone();
            let mut out = prev.matmul(&weights[0]);
            if spec.order >= 2 {
                let mut cur = lap(x);
                out.add_assign(&cur.matmul(&weights[1]));
                for w in &weights[2..] {
                    let next = lap(&cur).scale(2.0).sub(&prev);
                    out.add_assign(&next.matmul(w));
                    prev = cur;
                    cur = next;
                }
            }
            out
        }
        FilterKind::Appnp => {
            let alpha = spec.teleport_alpha.expect("validated");
            let mut p = xw(0);
            for k in 1..=spec.order {
                p = norm.mul_dense(&p).scale(1.0 - alpha);
                p.add_scaled_assign(&xw(k), alpha);
            }
            p
        }
    })
}

/// How a stacked GCN propagates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Propagation {
    /// `Ã` from the binarised, policy-applied adjacency.
    Normalized,
    /// Raw policy-applied path counts, i.e. plain neighbour sums.
    Sum,
}

/// `weights.len()` GCN layers, `weights[0]` applied first, with optional
/// ReLU between layers (never after the last).
pub fn stacked_linear_gcn(
    adj: &SparseMatrix<u64>,
    x: &DenseMatrix,
    self_loops: SelfLoopPolicy,
    propagation: Propagation,
    weights: &[DenseMatrix],
    activation: bool,
) -> Result<DenseMatrix> {
    if weights.is_empty() {
        return Err(Error::invalid("stacked GCN needs at least one layer"));
    }
    let prop = match propagation {
        Propagation::Normalized => adj
            .binarize()
            .set_self_loops(self_loops)?
            .normalize_sym()
            .into_sparse(),
        Propagation::Sum => adj.set_self_loops(self_loops)?.to_f64(),
    };
    let mut h = x.clone();
    for (l, w) in weights.iter().enumerate() {
        if h.cols() != w.rows() {
            return Err(Error::ShapeMismatch {
                op: "stacked gcn weight",
                left: h.shape(),
                right: w.shape(),
            });
        }
        h = prop.mul_dense(&h.matmul(w));
        if activation && l + 1 < weights.len() {
            h = relu(&h);
        }
    }
    Ok(h)
}
