//! Scaled adjacency matrices.
//!
//! A scale word is an ordered sequence of hops, each forward (along an edge,
//! `A`) or reverse (against one, `Aᵀ`). Its matrix is the left-to-right
//! product of the corresponding factors, so `AA^T` means `A · Aᵀ`.
//!
//! Row `i` of any matrix here is read as "node `i` aggregates from
//! `{j : M(i, j) != 0}`". With `A(i, j) = 1` for an edge `i → j`, row
//! aggregation over `A` gathers out-neighbour targets.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, NormalizedMatrix, SelfLoopPolicy, SparseMatrix};
use crate::util::short_hash;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Hop {
    /// `A`
    Fwd,
    /// `Aᵀ`
    Rev,
}

/// A non-empty hop sequence naming a scaled edge.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ScaleWord(Vec<Hop>);

impl ScaleWord {
    pub fn new(hops: Vec<Hop>) -> Result<Self> {
        if hops.is_empty() {
            return Err(Error::invalid("scale word must contain at least one hop"));
        }
        Ok(Self(hops))
    }

    pub fn hops(&self) -> &[Hop] {
        &self.0
    }

    /// The scale `k`.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// All `2^k` words of length `k`, ordered with `Fwd < Rev` per position.
    pub fn all_of_length(k: usize) -> Vec<ScaleWord> {
        (0..1usize << k)
            .map(|bits| {
                ScaleWord(
                    (0..k)
                        .map(|p| {
                            if bits >> (k - 1 - p) & 1 == 0 {
                                Hop::Fwd
                            } else {
                                Hop::Rev
                            }
                        })
                        .collect(),
                )
            })
            .collect()
    }

    /// Same hops traversed in the opposite direction.
    pub fn reversed(&self) -> ScaleWord {
        ScaleWord(
            self.0
                .iter()
                .rev()
                .map(|h| match h {
                    Hop::Fwd => Hop::Rev,
                    Hop::Rev => Hop::Fwd,
                })
                .collect(),
        )
    }
}

impl fmt::Display for ScaleWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for h in &self.0 {
            f.write_str(match h {
                Hop::Fwd => "A",
                Hop::Rev => "A^T",
            })?;
        }
        Ok(())
    }
}

impl FromStr for ScaleWord {
    type Err = Error;

    /// Parses names such as `A`, `A^T`, `AA^T`, `A^TA^TA`.
    fn from_str(s: &str) -> Result<Self> {
        let mut hops = Vec::new();
        let mut rest = s.trim();
        while !rest.is_empty() {
            if let Some(r) = rest.strip_prefix("A^T") {
                hops.push(Hop::Rev);
                rest = r;
            } else if let Some(r) = rest.strip_prefix('A') {
                hops.push(Hop::Fwd);
                rest = r;
            } else {
                return Err(Error::UnknownMatrix(s.to_string()));
            }
        }
        ScaleWord::new(hops).map_err(|_| Error::UnknownMatrix(s.to_string()))
    }
}

impl TryFrom<String> for ScaleWord {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ScaleWord> for String {
    fn from(w: ScaleWord) -> String {
        w.to_string()
    }
}

/// Product of `A`/`Aᵀ` factors in word order, integer path counts.
pub fn scale_word_matrix(g: &DirectedGraph, w: &ScaleWord) -> SparseMatrix<u64> {
    let a = g.a();
    let at = a.transpose();
    let factor = |h: &Hop| match h {
        Hop::Fwd => &a,
        Hop::Rev => &at,
    };
    let mut hops = w.hops().iter();
    let first = hops.next().expect("scale words are non-empty");
    hops.fold(factor(first).clone(), |acc, h| {
        acc.matmul(factor(h)).expect("square factors")
    })
}

/// The binarised, policy-applied scaled matrix with the given name.
pub fn named_matrix(
    g: &DirectedGraph,
    name: &str,
    policy: SelfLoopPolicy,
) -> Result<SparseMatrix<u64>> {
    let w: ScaleWord = name.parse()?;
    scale_word_matrix(g, &w).binarize().set_self_loops(policy)
}

/// The members of one scale level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledGraphSet {
    pub scale: usize,
    pub members: Vec<(ScaleWord, SparseMatrix<u64>)>,
    pub policy: SelfLoopPolicy,
    /// Hash of the base adjacency the set was derived from.
    pub lineage: String,
}

impl ScaledGraphSet {
    pub fn member(&self, name: &str) -> Option<&SparseMatrix<u64>> {
        self.members
            .iter()
            .find(|(w, _)| w.to_string() == name)
            .map(|(_, m)| m)
    }

    pub fn names(&self) -> Vec<String> {
        self.members.iter().map(|(w, _)| w.to_string()).collect()
    }
}

/// `{A, Aᵀ}` for `k = 1`, `{AA, AAᵀ, AᵀA, AᵀAᵀ}` for `k = 2`; each member
/// binarised and then given the self-loop policy.
pub fn build_scaled_set(
    g: &DirectedGraph,
    k: usize,
    policy: SelfLoopPolicy,
) -> Result<ScaledGraphSet> {
    if !(1..=2).contains(&k) {
        return Err(Error::invalid(format!(
            "scaled graph sets exist for k in {{1, 2}}, got {k}"
        )));
    }
    let members = ScaleWord::all_of_length(k)
        .into_iter()
        .map(|w| {
            let m = scale_word_matrix(g, &w).binarize().set_self_loops(policy)?;
            Ok((w, m))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScaledGraphSet {
        scale: k,
        members,
        policy,
        lineage: short_hash(g.adjacency().to_dump().as_bytes()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProximityKind {
    /// `A^{k-1} (Aᵀ)^{k-1}`: pairs whose forward k-paths meet.
    M,
    /// `(Aᵀ)^{k-1} A^{k-1}`: pairs whose k-paths share a source.
    D,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProximityMatrix {
    pub order: usize,
    pub kind: ProximityKind,
    pub matrix: SparseMatrix<u64>,
    pub pruned: bool,
}

/// k-th order proximity. Unpruned, this is the binarised `M⁽ᵏ⁾`/`D⁽ᵏ⁾`.
/// Pruned, order `k + 1` is grown from the diagonal-free order `k`:
/// `M̂⁽ᵏ⁺¹⁾ = offdiag(A · M̂⁽ᵏ⁾ · Aᵀ)` and `D̂⁽ᵏ⁺¹⁾ = offdiag(Aᵀ · D̂⁽ᵏ⁾ · A)`.
pub fn korder_proximity(
    g: &DirectedGraph,
    k: usize,
    kind: ProximityKind,
    prune: bool,
) -> Result<ProximityMatrix> {
    if k < 2 {
        return Err(Error::invalid(format!(
            "proximity order must be >= 2, got {k}"
        )));
    }
    let a = g.a();
    let at = a.transpose();
    let (left, right) = match kind {
        ProximityKind::M => (&a, &at),
        ProximityKind::D => (&at, &a),
    };
    let strip = |m: SparseMatrix<u64>| if prune { m.filter(|i, j| i != j) } else { m };
    let mut current = strip(left.matmul(right)?.binarize());
    for _ in 2..k {
        current = strip(left.matmul(&current)?.matmul(right)?.binarize());
    }
    Ok(ProximityMatrix {
        order: k,
        kind,
        matrix: current,
        pruned: prune,
    })
}

/// Support of `higher` minus the union of supports of `lowers`.
pub fn remove_shared_edges(
    higher: &SparseMatrix<u64>,
    lowers: &[SparseMatrix<u64>],
) -> Result<SparseMatrix<u64>> {
    lowers
        .iter()
        .try_fold(higher.clone(), |acc, low| acc.difference(low))
}

fn inception_supports(g: &DirectedGraph, k_max: usize) -> Result<Vec<SparseMatrix<u64>>> {
    if k_max < 1 {
        return Err(Error::invalid("inception order k_max must be >= 1"));
    }
    let mut out = vec![g.a()];
    for k in 2..=k_max {
        out.push(korder_proximity(g, k, ProximityKind::M, false)?.matrix);
        out.push(korder_proximity(g, k, ProximityKind::D, false)?.matrix);
    }
    Ok(out)
}

/// Inception graph set with every structural weight equal to 1:
/// `[Ã, M̃⁽²⁾, D̃⁽²⁾, …, M̃⁽ᵏ⁾, D̃⁽ᵏ⁾]`.
pub fn inception_uniform(g: &DirectedGraph, k_max: usize) -> Result<Vec<NormalizedMatrix>> {
    Ok(inception_supports(g, k_max)?
        .iter()
        .map(SparseMatrix::normalize_sym)
        .collect())
}

/// Same supports as [`inception_uniform`] with i.i.d. weights drawn from
/// `uniform[low, high]`, before normalisation.
pub fn random_inception_weights(
    g: &DirectedGraph,
    k_max: usize,
    low: f64,
    high: f64,
    seed: u64,
) -> Result<Vec<SparseMatrix<f64>>> {
    if !(low.is_finite() && high.is_finite() && low > 0.0 && low <= high) {
        return Err(Error::invalid(format!(
            "invalid weight range [{low}, {high}]"
        )));
    }
    let dist = Uniform::new_inclusive(low, high).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(inception_supports(g, k_max)?
        .iter()
        .map(|m| m.with_values(|_, _| dist.sample(&mut rng)))
        .collect())
}

pub fn random_weight_inception(
    g: &DirectedGraph,
    k_max: usize,
    low: f64,
    high: f64,
    seed: u64,
) -> Result<Vec<NormalizedMatrix>> {
    Ok(random_inception_weights(g, k_max, low, high, seed)?
        .iter()
        .map(SparseMatrix::normalize_sym)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub identity: &'static str,
    pub max_deviation: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfLoopExpansionReport {
    pub checks: Vec<IdentityCheck>,
    pub max_deviation: u64,
}

impl SelfLoopExpansionReport {
    pub fn holds(&self) -> bool {
        self.max_deviation == 0
    }
}

fn max_abs_int_diff(x: &SparseMatrix<u64>, y: &SparseMatrix<u64>) -> u64 {
    x.to_dense_vec()
        .iter()
        .zip(y.to_dense_vec())
        .map(|(a, b)| a.abs_diff(b))
        .max()
        .unwrap_or(0)
}

/// Checks the four products of `Â = A + I` against their expansions over
/// the integers.
pub fn selfloop_expansion_report(a: &SparseMatrix<u64>) -> Result<SelfLoopExpansionReport> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    let i = SparseMatrix::<u64>::identity(n);
    let at = a.transpose();
    let ah = a.add(&i)?;
    let aht = ah.transpose();
    let sum = |ms: &[&SparseMatrix<u64>]| -> Result<SparseMatrix<u64>> {
        ms.iter()
            .try_fold(SparseMatrix::zeros(n, n), |acc, m| acc.add(m))
    };
    let two_a = a.scale(2);
    let two_at = at.scale(2);
    let cases: [(&'static str, SparseMatrix<u64>, SparseMatrix<u64>); 4] = [
        (
            "(A+I)(A^T+I) = AA^T + A + A^T + I",
            ah.matmul(&aht)?,
            sum(&[&a.matmul(&at)?, a, &at, &i])?,
        ),
        (
            "(A^T+I)(A+I) = A^TA + A + A^T + I",
            aht.matmul(&ah)?,
            sum(&[&at.matmul(a)?, a, &at, &i])?,
        ),
        (
            "(A+I)(A+I) = AA + 2A + I",
            ah.matmul(&ah)?,
            sum(&[&a.matmul(a)?, &two_a, &i])?,
        ),
        (
            "(A^T+I)(A^T+I) = A^TA^T + 2A^T + I",
            aht.matmul(&aht)?,
            sum(&[&at.matmul(&at)?, &two_at, &i])?,
        ),
    ];
    let checks: Vec<IdentityCheck> = cases
        .iter()
        .map(|(name, lhs, rhs)| IdentityCheck {
            identity: name,
            max_deviation: max_abs_int_diff(lhs, rhs),
        })
        .collect();
    let max_deviation = checks.iter().map(|c| c.max_deviation).max().unwrap_or(0);
    Ok(SelfLoopExpansionReport {
        checks,
        max_deviation,
    })
}

/// Second-scale building blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SecondScaleBlock {
    AA,
    AAt,
    AtA,
    AtAt,
}

impl SecondScaleBlock {
    pub const ALL: [SecondScaleBlock; 4] = [Self::AA, Self::AAt, Self::AtA, Self::AtAt];

    pub fn hops(self) -> [Hop; 2] {
        match self {
            Self::AA => [Hop::Fwd, Hop::Fwd],
            Self::AAt => [Hop::Fwd, Hop::Rev],
            Self::AtA => [Hop::Rev, Hop::Fwd],
            Self::AtAt => [Hop::Rev, Hop::Rev],
        }
    }

    pub fn word(self) -> ScaleWord {
        ScaleWord(self.hops().to_vec())
    }
}

/// Flattens `k` second-scale blocks into the equivalent length-`2k` word.
pub fn word_embedding_witness(blocks: &[SecondScaleBlock]) -> Result<ScaleWord> {
    ScaleWord::new(blocks.iter().flat_map(|b| b.hops()).collect())
}

/// Matrix of a word over second-scale blocks, multiplying the block
/// matrices rather than the individual hops.
pub fn block_word_matrix(
    g: &DirectedGraph,
    blocks: &[SecondScaleBlock],
) -> Result<SparseMatrix<u64>> {
    let (first, rest) = blocks
        .split_first()
        .ok_or_else(|| Error::invalid("block word must be non-empty"))?;
    rest.iter()
        .try_fold(scale_word_matrix(g, &first.word()), |acc, b| {
            acc.matmul(&scale_word_matrix(g, &b.word()))
        })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EgoGraph {
    pub center: usize,
    pub nodes: BTreeSet<usize>,
    /// Scaled edges `(u, v)` traversed from visited nodes.
    pub edges: BTreeSet<(usize, usize)>,
}

/// Nodes reachable from `center` within `depth` scaled-edge hops.
pub fn ego_graph(
    g: &DirectedGraph,
    center: usize,
    depth: usize,
    w: &ScaleWord,
) -> Result<EgoGraph> {
    if center >= g.n() {
        return Err(Error::NodeOutOfRange {
            line: 0,
            node: center,
            n: g.n(),
        });
    }
    if depth < 1 {
        return Err(Error::invalid("ego-graph depth must be >= 1"));
    }
    let m = scale_word_matrix(g, w);
    let mut nodes = BTreeSet::from([center]);
    let mut edges = BTreeSet::new();
    let mut queue = VecDeque::from([(center, 0usize)]);
    while let Some((u, d)) = queue.pop_front() {
        if d == depth {
            continue;
        }
        for &v in m.row_indices(u) {
            edges.insert((u, v));
            if nodes.insert(v) {
                queue.push_back((v, d + 1));
            }
        }
    }
    Ok(EgoGraph {
        center,
        nodes,
        edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn six_node() -> DirectedGraph {
        DirectedGraph::from_edge_list(&[(0, 1), (2, 1), (3, 2), (4, 2), (5, 0)], 6).unwrap()
    }

    fn support(m: &SparseMatrix<u64>) -> Vec<(usize, usize)> {
        m.support().collect()
    }

    #[test]
    fn word_names_roundtrip() {
        for k in 1..=3 {
            for w in ScaleWord::all_of_length(k) {
                assert_eq!(w.to_string().parse::<ScaleWord>().unwrap(), w);
            }
        }
        assert_eq!(
            ScaleWord::all_of_length(2)
                .iter()
                .map(|w| w.to_string())
                .collect::<Vec<_>>(),
            ["AA", "AA^T", "A^TA", "A^TA^T"]
        );
        assert!("AB".parse::<ScaleWord>().is_err());
        assert!("".parse::<ScaleWord>().is_err());
        assert_eq!(
            "AA^T".parse::<ScaleWord>().unwrap().reversed().to_string(),
            "AA^T"
        );
        assert_eq!(
            "AA".parse::<ScaleWord>().unwrap().reversed().to_string(),
            "A^TA^T"
        );
    }

    #[test]
    fn word_matrices_on_six_node() {
        let g = six_node();
        assert_eq!(scale_word_matrix(&g, &"A".parse().unwrap()), g.a());
        let ata = scale_word_matrix(&g, &"A^TA".parse().unwrap());
        assert_eq!(support(&ata), vec![(0, 0), (1, 1), (2, 2)]);
        let aat = scale_word_matrix(&g, &"AA^T".parse().unwrap());
        assert_eq!(
            support(&aat),
            vec![
                (0, 0),
                (0, 2),
                (2, 0),
                (2, 2),
                (3, 3),
                (3, 4),
                (4, 3),
                (4, 4),
                (5, 5)
            ]
        );
    }

    #[test]
    fn scaled_sets() {
        let g = six_node();
        let s1 = build_scaled_set(&g, 1, SelfLoopPolicy::Keep).unwrap();
        assert_eq!(s1.names(), ["A", "A^T"]);
        let s2 = build_scaled_set(&g, 2, SelfLoopPolicy::Remove).unwrap();
        assert_eq!(s2.names(), ["AA", "AA^T", "A^TA", "A^TA^T"]);
        assert_eq!(
            support(s2.member("AA^T").unwrap()),
            vec![(0, 2), (2, 0), (3, 4), (4, 3)]
        );
        let empty = DirectedGraph::from_edge_list(&[], 4).unwrap();
        let s = build_scaled_set(&empty, 2, SelfLoopPolicy::Keep).unwrap();
        assert!(s.members.iter().all(|(_, m)| m.is_zero()));
        assert!(build_scaled_set(&g, 3, SelfLoopPolicy::Keep).is_err());
    }

    #[test]
    fn d2_pruned_on_six_node_is_empty() {
        let g = six_node();
        assert!(korder_proximity(&g, 2, ProximityKind::D, true)
            .unwrap()
            .matrix
            .is_zero());
        assert!(korder_proximity(&g, 1, ProximityKind::M, false).is_err());
    }

    #[test]
    fn shared_edge_removal() {
        let g = six_node();
        let m = scale_word_matrix(&g, &"AA^T".parse().unwrap()).binarize();
        assert!(remove_shared_edges(&m, std::slice::from_ref(&m)).unwrap().is_zero());
        assert_eq!(remove_shared_edges(&m, &[]).unwrap(), m);
        let m_hat = m.set_self_loops(SelfLoopPolicy::Remove).unwrap();
        assert_eq!(
            remove_shared_edges(&m_hat, &[g.a(), g.at()]).unwrap(),
            m_hat
        );
    }

    #[test]
    fn inception_sets() {
        let g = six_node();
        let one = inception_uniform(&g, 1).unwrap();
        assert_eq!(one, vec![g.a().normalize_sym()]);
        let two = inception_uniform(&g, 2).unwrap();
        assert_eq!(two.len(), 3);
        assert!(two[1]
            .as_sparse()
            .same_support(&scale_word_matrix(&g, &"AA^T".parse().unwrap())));
        assert!(two[2]
            .as_sparse()
            .same_support(&scale_word_matrix(&g, &"A^TA".parse().unwrap())));
        assert!(inception_uniform(&g, 0).is_err());
    }

    #[test]
    fn random_inception_is_seeded() {
        let g = DirectedGraph::random(20, 0.2, &mut ChaCha8Rng::seed_from_u64(3));
        let a = random_weight_inception(&g, 2, 1e-4, 1e4, 11).unwrap();
        let b = random_weight_inception(&g, 2, 1e-4, 1e4, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            random_weight_inception(&g, 2, 1.0, 1.0, 5).unwrap(),
            inception_uniform(&g, 2).unwrap()
        );
        assert!(random_weight_inception(&g, 2, 0.0, 1.0, 5).is_err());
        assert!(random_weight_inception(&g, 2, 2.0, 1.0, 5).is_err());
    }

    #[test]
    fn selfloop_expansion_on_zero_matrix() {
        let r = selfloop_expansion_report(&SparseMatrix::zeros(4, 4)).unwrap();
        assert!(r.holds());
        assert_eq!(r.checks.len(), 4);
    }

    #[test]
    fn witness_flattening() {
        use SecondScaleBlock::*;
        assert_eq!(
            word_embedding_witness(&[AAt]).unwrap().hops(),
            [Hop::Fwd, Hop::Rev]
        );
        assert_eq!(
            word_embedding_witness(&[AA, AtAt]).unwrap().to_string(),
            "AAA^TA^T"
        );
        assert!(word_embedding_witness(&[]).is_err());
    }

    #[test]
    fn ego_graphs_on_six_node() {
        let g = six_node();
        let e = ego_graph(&g, 3, 1, &"A".parse().unwrap()).unwrap();
        assert_eq!(e.nodes, BTreeSet::from([3, 2]));
        let e = ego_graph(&g, 3, 1, &"AA^T".parse().unwrap()).unwrap();
        assert_eq!(e.nodes, BTreeSet::from([3, 4]));
        assert!(e.edges.contains(&(3, 3)));
        let lonely = DirectedGraph::from_edge_list(&[(0, 1)], 3).unwrap();
        assert_eq!(
            ego_graph(&lonely, 2, 3, &"A".parse().unwrap())
                .unwrap()
                .nodes,
            BTreeSet::from([2])
        );
        assert!(ego_graph(&g, 6, 1, &"A".parse().unwrap()).is_err());
        // two forward hops from node 5: 5 -> 0 -> 1
        let e = ego_graph(&g, 5, 2, &"A".parse().unwrap()).unwrap();
        assert_eq!(e.nodes, BTreeSet::from([5, 0, 1]));
    }
}
