//! Self-contained verification suites over random and hand-built graphs.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, SelfLoopPolicy, SparseMatrix};
use crate::hermitian::{
    build_magnet, equivalence_check, skew_identity_check, EquivalenceRow, PhaseParam,
};
use crate::model::{
    agg_b, AggKind, AggOptions, BranchParams, Comb1, Comb2, MixAlpha, Mode, PreparedGraph,
    ScaleNet, ScaleNetConfig,
};
use crate::nn::{
    check_param_gradients, filter_forward, jitter_params, softmax_cross_entropy,
    stacked_linear_gcn, FilterSpec, Parameterized, Propagation,
};
use crate::scale::{
    block_word_matrix, korder_proximity, scale_word_matrix, selfloop_expansion_report,
    word_embedding_witness, ProximityKind, SecondScaleBlock,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Algebra,
    Proximity,
    Filters,
    Scalenet,
    Hermitian,
    All,
}

impl Suite {
    const EACH: [Suite; 5] = [
        Suite::Algebra,
        Suite::Proximity,
        Suite::Filters,
        Suite::Scalenet,
        Suite::Hermitian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Algebra => "algebra",
            Suite::Proximity => "proximity",
            Suite::Filters => "filters",
            Suite::Scalenet => "scalenet",
            Suite::Hermitian => "hermitian",
            Suite::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::EACH
            .into_iter()
            .chain([Suite::All])
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown suite `{s}`")))
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub suite: String,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
    /// Per-seed rows of the hermitian suite.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hermitian_rows: Vec<EquivalenceRow>,
}

impl VerifyReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// `seed,n,q,max_dev` rows.
    pub fn hermitian_csv(&self) -> String {
        let mut out = String::from("seed,n,q,max_dev\n");
        for r in &self.hermitian_rows {
            out.push_str(&format!("{},{},{},{:e}\n", r.seed, r.n, r.q, r.max_dev));
        }
        out
    }
}

struct Recorder {
    suite: Suite,
    checks: Vec<CheckResult>,
    rows: Vec<EquivalenceRow>,
}

impl Recorder {
    fn check(&mut self, name: &str, outcome: Result<(bool, String)>) {
        let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        self.checks.push(CheckResult {
            suite: self.suite.name().to_string(),
            name: name.to_string(),
            passed,
            detail,
        });
    }
}

pub fn verify(suite: Suite) -> VerifyReport {
    let suites: Vec<Suite> = if suite == Suite::All {
        Suite::EACH.to_vec()
    } else {
        vec![suite]
    };
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for s in suites {
        let mut rec = Recorder {
            suite: s,
            checks: Vec::new(),
            rows: Vec::new(),
        };
        match s {
            Suite::Algebra => algebra(&mut rec),
            Suite::Proximity => proximity(&mut rec),
            Suite::Filters => filters(&mut rec),
            Suite::Scalenet => scalenet(&mut rec),
            Suite::Hermitian => hermitian(&mut rec),
            Suite::All => unreachable!(),
        }
        checks.extend(rec.checks);
        rows.extend(rec.rows);
    }
    VerifyReport {
        suite,
        passed: checks.iter().all(|c| c.passed),
        checks,
        hermitian_rows: rows,
    }
}

fn random_graph(seed: u64, max_n: usize) -> DirectedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=max_n);
    let p = rng.random_range(0.0..0.4);
    DirectedGraph::random(n, p, &mut rng)
}

fn count(failures: usize, total: usize) -> (bool, String) {
    (
        failures == 0,
        format!("{} / {total} instances hold", total - failures),
    )
}

fn algebra(rec: &mut Recorder) {
    rec.check(
        "matmul associativity and transpose of product",
        (|| {
            let mut bad = 0;
            for seed in 0..50 {
                let g = random_graph(seed, 20);
                let (a, at) = (g.a(), g.at());
                let left = a.matmul(&at)?.matmul(&a)?;
                let right = a.matmul(&at.matmul(&a)?)?;
                let t = a.matmul(&a)?.transpose();
                bad += usize::from(left != right || t != at.matmul(&at)?);
            }
            Ok(count(bad, 50))
        })(),
    );
    rec.check(
        "self-loop expansion identities",
        (|| {
            let mut bad = 0;
            for seed in 0..200 {
                bad += usize::from(
                    !selfloop_expansion_report(random_graph(1000 + seed, 30).adjacency())?.holds(),
                );
            }
            Ok(count(bad, 200))
        })(),
    );
    rec.check(
        "second-scale words equal their flattening",
        (|| {
            let mut bad = 0;
            let mut total = 0;
            for seed in 0..100 {
                let g = random_graph(2000 + seed, 30);
                for k in 1..=3u32 {
                    for code in 0..4usize.pow(k) {
                        let blocks: Vec<SecondScaleBlock> = (0..k)
                            .map(|p| SecondScaleBlock::ALL[(code / 4usize.pow(p)) % 4])
                            .collect();
                        let flat = scale_word_matrix(&g, &word_embedding_witness(&blocks)?);
                        bad += usize::from(block_word_matrix(&g, &blocks)? != flat);
                        total += 1;
                    }
                }
            }
            Ok(count(bad, total))
        })(),
    );
    rec.check(
        "normalised entries in [0, 1], symmetric input stays symmetric",
        (|| {
            let mut bad = 0;
            for seed in 0..50 {
                let g = random_graph(3000 + seed, 25);
                let s = g.a().union(&g.at())?.normalize_sym().into_sparse();
                let in_range = s.values().iter().all(|v| (0.0..=1.0).contains(v));
                let sym = s
                    .triplets()
                    .all(|(i, j, v)| (s.get(j, i) - v).abs() <= 1e-15);
                bad += usize::from(!in_range || !sym);
            }
            Ok(count(bad, 50))
        })(),
    );
}

fn six_node_graph() -> DirectedGraph {
    DirectedGraph::from_edge_list(&[(0, 1), (2, 1), (3, 2), (4, 2), (5, 0)], 6)
        .expect("fixed edges")
}

fn from_rows(rows: [[u64; 6]; 6]) -> SparseMatrix<u64> {
    SparseMatrix::from_dense(6, 6, &rows.concat())
}

/// The four printed matrices of the six-node worked example.
pub fn six_node_golden() -> [(&'static str, usize, bool, SparseMatrix<u64>); 4] {
    [
        (
            "M2",
            2,
            false,
            from_rows([
                [1, 0, 1, 0, 0, 0],
                [0, 0, 0, 0, 0, 0],
                [1, 0, 1, 0, 0, 0],
                [0, 0, 0, 1, 1, 0],
                [0, 0, 0, 1, 1, 0],
                [0, 0, 0, 0, 0, 1],
            ]),
        ),
        (
            "M2 pruned",
            2,
            true,
            from_rows([
                [0, 0, 1, 0, 0, 0],
                [0, 0, 0, 0, 0, 0],
                [1, 0, 0, 0, 0, 0],
                [0, 0, 0, 0, 1, 0],
                [0, 0, 0, 1, 0, 0],
                [0, 0, 0, 0, 0, 0],
            ]),
        ),
        (
            "M3",
            3,
            false,
            from_rows([
                [0, 0, 0, 0, 0, 0],
                [0, 0, 0, 0, 0, 0],
                [0, 0, 0, 0, 0, 0],
                [0, 0, 0, 1, 1, 1],
                [0, 0, 0, 1, 1, 1],
                [0, 0, 0, 1, 1, 1],
            ]),
        ),
        (
            "M3 pruned",
            3,
            true,
            from_rows([
                [0, 0, 0, 0, 0, 0],
                [0, 0, 0, 0, 0, 0],
                [0, 0, 0, 0, 0, 0],
                [0, 0, 0, 0, 0, 1],
                [0, 0, 0, 0, 0, 1],
                [0, 0, 0, 1, 1, 0],
            ]),
        ),
    ]
}

fn proximity(rec: &mut Recorder) {
    let g = six_node_graph();
    for (name, k, pruned, expect) in six_node_golden() {
        rec.check(
            &format!("worked example {name}"),
            korder_proximity(&g, k, ProximityKind::M, pruned).map(|p| {
                let ok = p.matrix == expect;
                (
                    ok,
                    if ok {
                        "identical".into()
                    } else {
                        format!("got {:?}", p.matrix)
                    },
                )
            }),
        );
    }
    rec.check(
        "generated self-loops at order 2",
        (|| {
            let mut bad = 0;
            for seed in 0..100 {
                let g = random_graph(4000 + seed, 30);
                let m = korder_proximity(&g, 2, ProximityKind::M, false)?.matrix;
                let d = korder_proximity(&g, 2, ProximityKind::D, false)?.matrix;
                let indeg = g.in_degrees();
                let ok = (0..g.n()).all(|i| {
                    (g.out_degree(i) == 0 || m.get(i, i) > 0) && (indeg[i] == 0 || d.get(i, i) > 0)
                });
                bad += usize::from(!ok);
            }
            Ok(count(bad, 100))
        })(),
    );
    rec.check(
        "pruned proximity has an empty diagonal",
        (|| {
            let mut bad = 0;
            for seed in 0..50 {
                let g = random_graph(5000 + seed, 20);
                for k in 2..=4 {
                    for kind in [ProximityKind::M, ProximityKind::D] {
                        bad += usize::from(
                            !korder_proximity(&g, k, kind, true)?
                                .matrix
                                .has_zero_diagonal(),
                        );
                    }
                }
            }
            Ok(count(bad, 300))
        })(),
    );
}

fn dense_gcn_oracle(
    adj: &SparseMatrix<u64>,
    policy: SelfLoopPolicy,
    x: &DenseMatrix,
    w: &DenseMatrix,
) -> DenseMatrix {
    let n = adj.rows();
    let mut m = DenseMatrix::from_fn(n, n, |i, j| if adj.get(i, j) > 0 { 1.0 } else { 0.0 });
    for i in 0..n {
        match policy {
            SelfLoopPolicy::Add => m.set(i, i, 1.0),
            SelfLoopPolicy::Remove => m.set(i, i, 0.0),
            SelfLoopPolicy::Keep => {}
        }
    }
    let r: Vec<f64> = (0..n).map(|i| m.row(i).iter().sum()).collect();
    let c: Vec<f64> = (0..n).map(|j| (0..n).map(|i| m.get(i, j)).sum()).collect();
    let p = DenseMatrix::from_fn(n, n, |i, j| {
        if r[i] > 0.0 && c[j] > 0.0 {
            m.get(i, j) / (r[i] * c[j]).sqrt()
        } else {
            0.0
        }
    });
    p.matmul(&x.matmul(w))
}

fn filters(rec: &mut Recorder) {
    rec.check(
        "GCN filter matches dense normalisation",
        (|| {
            let mut worst: f64 = 0.0;
            for seed in 0..30 {
                let mut rng = ChaCha8Rng::seed_from_u64(6000 + seed);
                let g = DirectedGraph::random(rng.random_range(2..25), 0.2, &mut rng);
                let x = DenseMatrix::random_normal(g.n(), 4, 1.0, &mut rng);
                let w = DenseMatrix::random_normal(4, 3, 1.0, &mut rng);
                for p in [
                    SelfLoopPolicy::Add,
                    SelfLoopPolicy::Remove,
                    SelfLoopPolicy::Keep,
                ] {
                    let got = filter_forward(
                        &FilterSpec::gcn(p),
                        g.adjacency(),
                        &x,
                        std::slice::from_ref(&w),
                    )?;
                    worst =
                        worst.max(got.max_abs_diff(&dense_gcn_oracle(g.adjacency(), p, &x, &w)));
                }
            }
            Ok((worst < 1e-12, format!("max deviation {worst:e}")))
        })(),
    );
    rec.check(
        "k layers on AA equal 2k layers on A (linear, sum propagation)",
        (|| {
            let mut worst: f64 = 0.0;
            for seed in 0..50 {
                let mut rng = ChaCha8Rng::seed_from_u64(7000 + seed);
                let g = DirectedGraph::random(rng.random_range(2..20), 0.2, &mut rng);
                let k = rng.random_range(1..=3);
                let x = DenseMatrix::random_normal(g.n(), 3, 1.0, &mut rng);
                let ws: Vec<DenseMatrix> = (0..k)
                    .map(|_| DenseMatrix::random_normal(3, 3, 0.5, &mut rng))
                    .collect();
                let aa = g.a().matmul(&g.a())?;
                let lhs = stacked_linear_gcn(
                    &aa,
                    &x,
                    SelfLoopPolicy::Keep,
                    Propagation::Sum,
                    &ws,
                    false,
                )?;
                let interleaved: Vec<DenseMatrix> = ws
                    .iter()
                    .flat_map(|w| [w.clone(), DenseMatrix::identity(3)])
                    .collect();
                let rhs = stacked_linear_gcn(
                    &g.a(),
                    &x,
                    SelfLoopPolicy::Keep,
                    Propagation::Sum,
                    &interleaved,
                    false,
                )?;
                worst = worst.max(lhs.max_abs_diff(&rhs));
            }
            Ok((worst <= 1e-6, format!("max deviation {worst:e}")))
        })(),
    );
    rec.check(
        "degenerate filters reduce to a linear map",
        (|| {
            let mut rng = ChaCha8Rng::seed_from_u64(8000);
            let g = DirectedGraph::random(15, 0.2, &mut rng);
            let x = DenseMatrix::random_normal(15, 4, 1.0, &mut rng);
            let w = DenseMatrix::random_normal(4, 2, 1.0, &mut rng);
            let xw = x.matmul(&w);
            let mlp = filter_forward(
                &FilterSpec::mlp(),
                g.adjacency(),
                &x,
                std::slice::from_ref(&w),
            )?;
            let cheb = filter_forward(
                &FilterSpec::cheb(1),
                g.adjacency(),
                &x,
                std::slice::from_ref(&w),
            )?;
            // no edges: every propagation step vanishes, leaving the last teleport term
            let empty = DirectedGraph::from_edge_list(&[], 15)?;
            let appnp = filter_forward(
                &FilterSpec::appnp(3, 0.25, SelfLoopPolicy::Keep),
                empty.adjacency(),
                &x,
                &[w.clone(), w.clone(), w.clone(), w.clone()],
            )?
            .scale(4.0);
            let worst = [mlp, cheb, appnp]
                .iter()
                .map(|o| o.max_abs_diff(&xw))
                .fold(0.0, f64::max);
            Ok((worst < 1e-12, format!("max deviation {worst:e}")))
        })(),
    );
}

fn scalenet(rec: &mut Recorder) {
    rec.check(
        "AGG-B coefficient table",
        Ok({
            let got: Vec<(f64, f64)> = [-1.0, 0.0, 0.5, 1.0]
                .iter()
                .map(|&a| MixAlpha(a).coefficients())
                .collect();
            let ok = got == [(0.0, 0.0), (0.0, 1.0), (0.75, 0.75), (2.0, 0.0)];
            (ok, format!("{got:?}"))
        }),
    );
    rec.check(
        "union / intersection modes equal single aggregation",
        (|| {
            let mut worst: f64 = 0.0;
            let opts = AggOptions {
                kind: AggKind::Gcn,
                sage_normalized: false,
            };
            for seed in 0..20 {
                let mut rng = ChaCha8Rng::seed_from_u64(9000 + seed);
                let g = DirectedGraph::random(rng.random_range(2..20), 0.25, &mut rng);
                let x = DenseMatrix::random_normal(g.n(), 3, 1.0, &mut rng);
                let params = BranchParams::new(3, 2, AggKind::Gcn, &mut rng);
                let (m, n) = (g.a().matmul(&g.a())?, g.at().matmul(&g.at())?);
                for (alpha, support) in [(2.0, m.union(&n)?), (3.0, m.intersect(&n)?)] {
                    let got = agg_b(
                        MixAlpha(alpha),
                        &m,
                        &n,
                        SelfLoopPolicy::Add,
                        opts,
                        &x,
                        &params,
                    )?;
                    let w = &params.m.neigh;
                    let mut expect =
                        dense_gcn_oracle(&support, SelfLoopPolicy::Add, &x, &w.weight.value);
                    w.add_bias(&mut expect);
                    worst = worst.max(got.max_abs_diff(&expect));
                }
            }
            Ok((worst <= 1e-12, format!("max deviation {worst:e}")))
        })(),
    );
    rec.check(
        "composite gradient matches finite differences",
        (|| {
            let mut worst: f64 = 0.0;
            for (k, (comb1, comb2, bn)) in [
                (Comb1::Sum, Comb2::Sum, true),
                (Comb1::JkCat, Comb2::JkCat, false),
                (Comb1::JkMax, Comb2::Last, true),
            ]
            .into_iter()
            .enumerate()
            {
                let mut rng = ChaCha8Rng::seed_from_u64(9500 + k as u64);
                let g = DirectedGraph::random(10, 0.3, &mut rng);
                let x = DenseMatrix::random_normal(10, 3, 1.0, &mut rng);
                let labels: Vec<usize> = (0..10).map(|i| i % 3).collect();
                let idx: Vec<usize> = (0..10).collect();
                let mut cfg =
                    ScaleNetConfig::single_branch("AA", "A^TA^T", 0.5, SelfLoopPolicy::Add);
                cfg.branches.push(crate::model::BranchSpec {
                    pair: ("AA^T".into(), "A^TA".into()),
                    alpha: MixAlpha(2.0),
                    self_loops: SelfLoopPolicy::Remove,
                });
                cfg.hidden = 4;
                cfg.layers = 2;
                cfg.comb1 = comb1;
                cfg.comb2 = comb2;
                cfg.batchnorm = bn;
                cfg.seed = k as u64;
                let graph = PreparedGraph::new(&g, &cfg)?;
                let mut model = ScaleNet::new(&cfg, 3, 3)?;
                jitter_params(&mut model, 0.1, &mut rng);
                let loss = |m: &ScaleNet| {
                    let mut m = m.clone();
                    let mut r = ChaCha8Rng::seed_from_u64(1);
                    let out = m
                        .forward(&graph, &x, Mode::Train(&mut r))
                        .expect("shapes checked")
                        .0;
                    softmax_cross_entropy(&out.logits, &labels, &idx).0
                };
                let report = check_param_gradients(
                    &mut model,
                    |m| {
                        m.zero_grad();
                        let mut r = ChaCha8Rng::seed_from_u64(1);
                        let (out, cache) = m
                            .forward(&graph, &x, Mode::Train(&mut r))
                            .expect("shapes checked");
                        let (_, d) = softmax_cross_entropy(&out.logits, &labels, &idx);
                        m.backward(&graph, &cache, &d);
                    },
                    loss,
                    1e-5,
                );
                worst = worst.max(report.max_rel_error);
            }
            Ok((worst < 1e-3, format!("max relative error {worst:e}")))
        })(),
    );
}

/// Phase values cycled through by the hermitian suite.
pub const HERMITIAN_QS: [f64; 4] = [0.0, 0.05, 0.1, 0.25];

fn hermitian(rec: &mut Recorder) {
    let mut skew_worst: f64 = 0.0;
    let mut shape_worst: f64 = 0.0;
    let mut failed = None;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + seed);
        let n = rng.random_range(2..=50);
        let g = DirectedGraph::random(n, rng.random_range(0.05..0.4), &mut rng);
        let x = DenseMatrix::random_normal(n, 4, 1.0, &mut rng);
        let phase = PhaseParam::new(HERMITIAN_QS[seed as usize % 4]).expect("valid q");
        let hat = build_magnet(&g, phase).hat;
        shape_worst = shape_worst.max(hat.symmetry_error()).max(hat.skew_error());
        skew_worst = skew_worst.max(skew_identity_check(&g, phase));
        match equivalence_check(&g, &x, phase, seed) {
            Ok(row) => rec.rows.push(row),
            Err(e) => failed = Some(e),
        }
    }
    rec.check(
        "real part symmetric, imaginary part skew",
        Ok((
            shape_worst <= 1e-14,
            format!("max deviation {shape_worst:e}"),
        )),
    );
    rec.check(
        "imaginary part equals scaled skew adjacency",
        Ok((skew_worst < 1e-12, format!("max deviation {skew_worst:e}"))),
    );
    let worst = rec.rows.iter().map(|r| r.max_dev).fold(0.0, f64::max);
    rec.check(
        "complex layer equals three-term closed form",
        match failed {
            Some(e) => Err(e),
            None => Ok((
                worst < 1e-10,
                format!("{} seeds, max deviation {worst:e}", rec.rows.len()),
            )),
        },
    );
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::EACH.into_iter().chain([Suite::All]) {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn proximity_suite_passes() {
        let r = verify(Suite::Proximity);
        assert!(r.passed, "{:?}", r.failures().collect::<Vec<_>>());
    }
}
