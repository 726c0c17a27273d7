//! MagNet's Hermitian adjacency and its real-valued closed form.
//!
//! With `A_s = (A+Aᵀ)/2`, `Ã_s = D^{-1/2} A_s D^{-1/2}` and
//! `Θ = exp(i·2πq(A−Aᵀ))`, the magnetic adjacency `Â_s = Ã_s ⊙ Θ` splits into
//! a symmetric real part and a skew-symmetric imaginary part
//! `0.5·sin α · D^{-1/2}(A−Aᵀ)D^{-1/2}`. A two-term complex Chebyshev layer
//! followed by real/imag unwinding then collapses to
//!
//! ```text
//! X·W_self + D^{-1/2}(A_s ⊙ cos α(A−Aᵀ))D^{-1/2}·X·W_real
//!          + 0.5 sin α · D^{-1/2}(A−Aᵀ)D^{-1/2}·X·W_skew + bias
//! ```
//!
//! Degrees are raw `A_s` row sums; no self-loop is added.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::graph::DirectedGraph;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseParam {
    q: f64,
}

impl PhaseParam {
    pub fn new(q: f64) -> Result<Self> {
        if !(q >= 0.0 && q.is_finite()) {
            return Err(Error::invalid(format!(
                "phase parameter q = {q} must be finite and >= 0"
            )));
        }
        Ok(Self { q })
    }

    pub fn q(self) -> f64 {
        self.q
    }

    /// `α = 2πq`.
    pub fn alpha(self) -> f64 {
        2.0 * PI * self.q
    }

    pub fn in_standard_regime(self) -> bool {
        self.q <= 0.25
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexAdjacency {
    pub real: DenseMatrix,
    pub imag: DenseMatrix,
}

impl ComplexAdjacency {
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.real.get(i, j), self.imag.get(i, j))
    }

    /// `max |real − realᵀ|`.
    pub fn symmetry_error(&self) -> f64 {
        self.real.max_abs_diff(&self.real.transpose())
    }

    /// `max |imag + imagᵀ|`.
    pub fn skew_error(&self) -> f64 {
        self.imag.add(&self.imag.transpose()).max_abs()
    }

    /// `self · (xr + i·xi)` as a (real, imag) pair.
    fn apply(&self, xr: &DenseMatrix, xi: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
        let re = self.real.matmul(xr).sub(&self.imag.matmul(xi));
        let im = self.real.matmul(xi).add(&self.imag.matmul(xr));
        (re, im)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MagnetMatrices {
    /// `(A+Aᵀ)/2`.
    pub a_s: DenseMatrix,
    /// `D^{-1/2} A_s D^{-1/2}`.
    pub a_s_norm: DenseMatrix,
    pub degrees: Vec<f64>,
    /// `Â_s = Ã_s ⊙ Θ`.
    pub hat: ComplexAdjacency,
}

fn dense_adjacency(g: &DirectedGraph) -> DenseMatrix {
    let a = g.a();
    DenseMatrix::from_fn(g.n(), g.n(), |i, j| a.get(i, j) as f64)
}

fn inv_sqrt(d: &[f64]) -> Vec<f64> {
    d.iter()
        .map(|&v| if v > 0.0 { 1.0 / v.sqrt() } else { 0.0 })
        .collect()
}

fn sym_scale(m: &DenseMatrix, s: &[f64]) -> DenseMatrix {
    DenseMatrix::from_fn(m.rows(), m.cols(), |i, j| s[i] * m.get(i, j) * s[j])
}

pub fn build_magnet(g: &DirectedGraph, phase: PhaseParam) -> MagnetMatrices {
    let a = dense_adjacency(g);
    let at = a.transpose();
    let a_s = a.add(&at).scale(0.5);
    let degrees: Vec<f64> = (0..g.n()).map(|i| a_s.row(i).iter().sum()).collect();
    let a_s_norm = sym_scale(&a_s, &inv_sqrt(&degrees));
    let alpha = phase.alpha();
    let n = g.n();
    let mut real = DenseMatrix::zeros(n, n);
    let mut imag = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let w = a_s_norm.get(i, j);
            if w == 0.0 {
                continue;
            }
            let z = w * Complex64::from_polar(1.0, alpha * (a.get(i, j) - at.get(i, j)));
            real.set(i, j, z.re);
            imag.set(i, j, z.im);
        }
    }
    MagnetMatrices {
        a_s,
        a_s_norm,
        degrees,
        hat: ComplexAdjacency { real, imag },
    }
}

/// `D^{-1/2}(A_s ⊙ cos α(A−Aᵀ))D^{-1/2}` and `0.5 sin α · D^{-1/2}(A−Aᵀ)D^{-1/2}`.
fn closed_form_parts(g: &DirectedGraph, phase: PhaseParam) -> (DenseMatrix, DenseMatrix) {
    let a = dense_adjacency(g);
    let skew = a.sub(&a.transpose());
    let a_s = a.add(&a.transpose()).scale(0.5);
    let degrees: Vec<f64> = (0..g.n()).map(|i| a_s.row(i).iter().sum()).collect();
    let s = inv_sqrt(&degrees);
    let alpha = phase.alpha();
    let cosine = a_s.hadamard(&skew.map(|v| (alpha * v).cos()));
    (
        sym_scale(&cosine, &s),
        sym_scale(&skew, &s).scale(0.5 * alpha.sin()),
    )
}

/// Max deviation between `imag(Â_s)` and `0.5 sin α · D^{-1/2}(A−Aᵀ)D^{-1/2}`.
pub fn skew_identity_check(g: &DirectedGraph, phase: PhaseParam) -> f64 {
    let hat = build_magnet(g, phase).hat;
    let (_, skew) = closed_form_parts(g, phase);
    hat.imag.max_abs_diff(&skew)
}

/// Weights of a MagNet layer: `Z = T̂₁X̂W₁ + T̂₂X̂W₂ + b`, then
/// `Out = Re(Z)·W_r + Im(Z)·W_i + b_o`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnetWeights {
    pub w1: DenseMatrix,
    /// Present for `k = 2`.
    pub w2: Option<DenseMatrix>,
    pub conv_bias: Vec<f64>,
    pub w_real: DenseMatrix,
    pub w_imag: DenseMatrix,
    pub out_bias: Vec<f64>,
}

impl MagnetWeights {
    /// Only Chebyshev orders 1 and 2 are supported.
    pub fn random<R: Rng + ?Sized>(
        input: usize,
        hidden: usize,
        output: usize,
        k: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if !(1..=2).contains(&k) {
            return Err(Error::invalid(format!(
                "Chebyshev order k = {k} not in {{1, 2}}"
            )));
        }
        let mut m = |r, c| DenseMatrix::random_normal(r, c, 1.0, rng);
        let w1 = m(input, hidden);
        let w2 = (k >= 2).then(|| m(input, hidden));
        let conv_bias = m(1, hidden).into_vec();
        let w_real = m(hidden, output);
        let w_imag = m(hidden, output);
        let out_bias = m(1, output).into_vec();
        Ok(Self {
            w1,
            w2,
            conv_bias,
            w_real,
            w_imag,
            out_bias,
        })
    }

    pub fn order(&self) -> usize {
        if self.w2.is_some() {
            2
        } else {
            1
        }
    }

    /// Weights of the closed form. `faithful_quirk` selects `T̂₂ = −Â_s`
    /// (otherwise `T̂₂ = I − Â_s`).
    pub fn closed_form(&self, faithful_quirk: bool) -> ClosedFormWeights {
        let sum = self.w_real.add(&self.w_imag);
        let diff = self.w_real.sub(&self.w_imag);
        let (input, output) = (self.w1.rows(), self.w_real.cols());
        let (self_w, real_w, skew_w) = match &self.w2 {
            Some(w2) => {
                let tau = if faithful_quirk { 0.0 } else { 1.0 };
                (
                    self.w1.add(&w2.scale(tau)).matmul(&sum),
                    w2.matmul(&sum).scale(-1.0),
                    w2.matmul(&diff),
                )
            }
            None => (
                self.w1.matmul(&sum),
                DenseMatrix::zeros(input, output),
                DenseMatrix::zeros(input, output),
            ),
        };
        // same evaluation order as the complex pipeline, so X = 0 agrees bitwise
        let b = DenseMatrix::from_vec(1, self.conv_bias.len(), self.conv_bias.clone());
        let mut bias = b.matmul(&self.w_real);
        bias.add_assign(&b.matmul(&self.w_imag));
        bias.add_row_broadcast(&self.out_bias);
        ClosedFormWeights {
            w_self: self_w,
            w_real: real_w,
            w_skew: skew_w,
            bias: bias.into_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormWeights {
    pub w_self: DenseMatrix,
    pub w_real: DenseMatrix,
    pub w_skew: DenseMatrix,
    pub bias: Vec<f64>,
}

/// Complex Chebyshev layer on `X̂ = X + iX` with real/imag unwinding.
pub fn magnet_forward(
    g: &DirectedGraph,
    x: &DenseMatrix,
    phase: PhaseParam,
    weights: &MagnetWeights,
    faithful_quirk: bool,
) -> Result<DenseMatrix> {
    if x.rows() != g.n() || x.cols() != weights.w1.rows() {
        return Err(Error::ShapeMismatch {
            op: "magnet_forward",
            left: (g.n(), weights.w1.rows()),
            right: x.shape(),
        });
    }
    let (xr, xi) = (x.clone(), x.clone());
    // T̂₁ = I
    let mut zr = xr.matmul(&weights.w1);
    let mut zi = xi.matmul(&weights.w1);
    if let Some(w2) = &weights.w2 {
        let hat = build_magnet(g, phase).hat;
        let (ar, ai) = hat.apply(&xr, &xi);
        let (mut tr, mut ti) = (ar.scale(-1.0), ai.scale(-1.0));
        if !faithful_quirk {
            tr.add_assign(&xr);
            ti.add_assign(&xi);
        }
        zr.add_assign(&tr.matmul(w2));
        zi.add_assign(&ti.matmul(w2));
    }
    zr.add_row_broadcast(&weights.conv_bias);
    zi.add_row_broadcast(&weights.conv_bias);
    let mut out = zr.matmul(&weights.w_real);
    out.add_assign(&zi.matmul(&weights.w_imag));
    out.add_row_broadcast(&weights.out_bias);
    Ok(out)
}

/// Real-valued three-term form.
pub fn closed_form_out2(
    g: &DirectedGraph,
    x: &DenseMatrix,
    phase: PhaseParam,
    w: &ClosedFormWeights,
) -> DenseMatrix {
    let (cosine, skew) = closed_form_parts(g, phase);
    let mut out = x.matmul(&w.w_self);
    out.add_assign(&cosine.matmul(x).matmul(&w.w_real));
    out.add_assign(&skew.matmul(x).matmul(&w.w_skew));
    out.add_row_broadcast(&w.bias);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceRow {
    pub seed: u64,
    pub n: usize,
    pub q: f64,
    pub max_dev: f64,
}

/// Max deviation between the complex `k = 2` pipeline (quirk on) and the
/// closed form, with random weights drawn from `seed`.
pub fn equivalence_check(
    g: &DirectedGraph,
    x: &DenseMatrix,
    phase: PhaseParam,
    seed: u64,
) -> Result<EquivalenceRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = MagnetWeights::random(x.cols(), 6, 3, 2, &mut rng)?;
    let complex = magnet_forward(g, x, phase, &weights, true)?;
    let closed = closed_form_out2(g, x, phase, &weights.closed_form(true));
    Ok(EquivalenceRow {
        seed,
        n: g.n(),
        q: phase.q(),
        max_dev: complex.max_abs_diff(&closed),
    })
}

/// One equivalence row per seed on a random digraph with `n ∈ [5, max_n]`,
/// edge probability in `[0.05, 0.4]` and `q ∈ [0, 0.25]`.
pub fn equivalence_sweep(seeds: std::ops::Range<u64>, max_n: usize) -> Result<Vec<EquivalenceRow>> {
    seeds
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.random_range(5..=max_n.max(5));
            let p = rng.random_range(0.05..=0.4);
            let q = rng.random_range(0.0..=0.25);
            let g = DirectedGraph::random(n, p, &mut rng);
            let x = DenseMatrix::random_normal(n, 4, 1.0, &mut rng);
            equivalence_check(&g, &x, PhaseParam::new(q)?, seed)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_graph(n: usize, seed: u64) -> DirectedGraph {
        DirectedGraph::random(n, 0.2, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    fn phase(q: f64) -> PhaseParam {
        PhaseParam::new(q).unwrap()
    }

    #[test]
    fn negative_q_rejected() {
        assert!(PhaseParam::new(-0.1).is_err());
        assert!(PhaseParam::new(f64::NAN).is_err());
        assert!(!phase(0.3).in_standard_regime());
    }

    #[test]
    fn zero_phase_is_real_normalized_symmetric() {
        let g = random_graph(12, 1);
        let m = build_magnet(&g, phase(0.0));
        assert_eq!(m.hat.imag.max_abs(), 0.0);
        assert_eq!(m.hat.real, m.a_s_norm);
        assert_eq!(skew_identity_check(&g, phase(0.0)), 0.0);
    }

    #[test]
    fn quarter_phase_unidirectional_edge() {
        // 0 -> 1, 1 <-> 2
        let g = DirectedGraph::from_edge_list(&[(0, 1), (1, 2), (2, 1)], 3).unwrap();
        let m = build_magnet(&g, phase(0.25));
        assert_eq!(m.degrees, vec![0.5, 1.5, 1.0]);
        let d = (0.5f64 * 1.5).sqrt();
        assert!(m.hat.real.get(0, 1).abs() < 1e-15);
        assert!((m.hat.imag.get(0, 1) - 0.5 / d).abs() < 1e-15);
        assert!((m.hat.imag.get(1, 0) + 0.5 / d).abs() < 1e-15);
        assert_eq!(m.hat.imag.get(1, 2), 0.0);
        assert!((m.hat.real.get(1, 2) - 1.0 / 1.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn reciprocal_only_graph_has_no_skew() {
        let g = DirectedGraph::from_edge_list(&[(0, 1), (1, 0), (1, 2), (2, 1)], 3).unwrap();
        for q in [0.0, 0.1, 0.25] {
            let m = build_magnet(&g, phase(q));
            assert_eq!(m.hat.imag.max_abs(), 0.0);
            assert_eq!(skew_identity_check(&g, phase(q)), 0.0);
        }
    }

    #[test]
    fn real_symmetric_imag_skew_and_unit_phase() {
        for seed in 0..10 {
            let g = random_graph(15, seed);
            let m = build_magnet(&g, phase(0.03 * seed as f64));
            assert!(m.hat.symmetry_error() <= 1e-14);
            assert!(m.hat.skew_error() <= 1e-14);
            for i in 0..15 {
                for j in 0..15 {
                    assert!((m.hat.get(i, j).norm() - m.a_s_norm.get(i, j)).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn skew_identity_on_random_graph() {
        let g = random_graph(30, 7);
        assert!(skew_identity_check(&g, phase(0.1)) < 1e-12);
    }

    #[test]
    fn first_order_is_real_and_imag_heads() {
        let g = random_graph(10, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = DenseMatrix::random_normal(10, 4, 1.0, &mut rng);
        let mut w = MagnetWeights::random(4, 5, 2, 1, &mut rng).unwrap();
        w.conv_bias.fill(0.0);
        w.out_bias.fill(0.0);
        let out = magnet_forward(&g, &x, phase(0.2), &w, true).unwrap();
        let h = x.matmul(&w.w1);
        let expect = h.matmul(&w.w_real).add(&h.matmul(&w.w_imag));
        assert!(out.max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn closed_form_matches_both_recurrences() {
        let g = random_graph(20, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = DenseMatrix::random_normal(20, 3, 1.0, &mut rng);
        let w = MagnetWeights::random(3, 4, 2, 2, &mut rng).unwrap();
        for quirk in [true, false] {
            let a = magnet_forward(&g, &x, phase(0.1), &w, quirk).unwrap();
            let b = closed_form_out2(&g, &x, phase(0.1), &w.closed_form(quirk));
            assert!(a.max_abs_diff(&b) < 1e-10, "quirk {quirk}");
        }
    }

    #[test]
    fn zero_features_give_bias_exactly() {
        let g = random_graph(9, 5);
        let x = DenseMatrix::zeros(9, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = MagnetWeights::random(3, 4, 2, 2, &mut rng).unwrap();
        let a = magnet_forward(&g, &x, phase(0.15), &w, true).unwrap();
        let cf = w.closed_form(true);
        let b = closed_form_out2(&g, &x, phase(0.15), &cf);
        assert_eq!(a, b);
        for r in 0..9 {
            assert_eq!(a.row(r), cf.bias.as_slice());
        }
    }

    #[test]
    fn order_above_two_is_not_representable() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            MagnetWeights::random(2, 2, 2, 2, &mut rng).unwrap().order(),
            2
        );
        assert_eq!(
            MagnetWeights::random(2, 2, 2, 1, &mut rng).unwrap().order(),
            1
        );
        assert!(MagnetWeights::random(2, 2, 2, 3, &mut rng).is_err());
    }
}
