//! Sparse directed graphs and the semiring algebra over their adjacency
//! matrices.
//!
//! Matrices are stored in canonical compressed-row form: column indices are
//! strictly increasing within each row and no explicit zeros are stored, so
//! two matrices are equal exactly when their structs compare equal.
//!
//! Integer path counts (`u64`) are the default value type. Binarisation is
//! an explicit step because the self-loop expansion identities such as
//! `(A+I)(A+I) = AA + 2A + I` hold over the integers but not over booleans.

use std::fmt::{Debug, Display};
use std::ops::{Add, Mul};
use std::str::FromStr;

use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

/// Values a [`SparseMatrix`] can hold.
pub trait Scalar:
    Copy + PartialEq + Debug + Zero + One + Add<Output = Self> + Mul<Output = Self> + ToPrimitive
{
}

impl<T> Scalar for T where
    T: Copy + PartialEq + Debug + Zero + One + Add<Output = T> + Mul<Output = T> + ToPrimitive
{
}

/// What to do with the diagonal of a square matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelfLoopPolicy {
    /// Every diagonal entry becomes at least 1.
    Add,
    /// Every diagonal entry becomes 0.
    Remove,
    Keep,
}

impl SelfLoopPolicy {
    pub fn name(self) -> &'static str {
        match self {
            SelfLoopPolicy::Add => "add",
            SelfLoopPolicy::Remove => "remove",
            SelfLoopPolicy::Keep => "keep",
        }
    }
}

impl FromStr for SelfLoopPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "add" => Ok(SelfLoopPolicy::Add),
            "remove" => Ok(SelfLoopPolicy::Remove),
            "keep" => Ok(SelfLoopPolicy::Keep),
            other => Err(Error::invalid(format!(
                "unknown self-loop policy `{other}`"
            ))),
        }
    }
}

#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix<T = u64> {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> Debug for SparseMatrix<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SparseMatrix {}x{} {{", self.rows, self.cols)?;
        for (i, j, v) in self.triplets() {
            write!(f, " ({i},{j})={v:?}")?;
        }
        write!(f, " }}")
    }
}

impl<T: Scalar> SparseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            indptr: vec![0; rows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![T::one(); n],
        }
    }

    /// Builds a canonical matrix from unordered triplets. Duplicates are
    /// summed and resulting zeros dropped.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, T)>,
    ) -> Result<Self> {
        let mut buckets: Vec<Vec<(usize, T)>> = vec![Vec::new(); rows];
        for (i, j, v) in triplets {
            if i >= rows || j >= cols {
                return Err(Error::invalid(format!(
                    "entry ({i},{j}) outside {rows}x{cols} matrix"
                )));
            }
            buckets[i].push((j, v));
        }
        let mut out = Self::zeros(rows, cols);
        for (i, mut bucket) in buckets.into_iter().enumerate() {
            bucket.sort_by_key(|(j, _)| *j);
            let mut iter = bucket.into_iter().peekable();
            while let Some((j, mut v)) = iter.next() {
                while let Some(&(j2, v2)) = iter.peek() {
                    if j2 != j {
                        break;
                    }
                    v = v + v2;
                    iter.next();
                }
                if !v.is_zero() {
                    out.indices.push(j);
                    out.values.push(v);
                }
            }
            out.indptr[i + 1] = out.indices.len();
        }
        Ok(out)
    }

    /// Row-major dense buffer to sparse.
    pub fn from_dense(rows: usize, cols: usize, data: &[T]) -> Self {
        assert_eq!(data.len(), rows * cols, "dense buffer length mismatch");
        let mut out = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let v = data[i * cols + j];
                if !v.is_zero() {
                    out.indices.push(j);
                    out.values.push(v);
                }
            }
            out.indptr[i + 1] = out.indices.len();
        }
        out
    }

    pub fn to_dense_vec(&self) -> Vec<T> {
        let mut data = vec![T::zero(); self.rows * self.cols];
        for (i, j, v) in self.triplets() {
            data[i * self.cols + j] = v;
        }
        data
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let range = self.indptr[i]..self.indptr[i + 1];
        self.indices[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.indptr[i + 1] - self.indptr[i]
    }

    pub fn row_indices(&self, i: usize) -> &[usize] {
        &self.indices[self.indptr[i]..self.indptr[i + 1]]
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let idx = self.row_indices(i);
        match idx.binary_search(&j) {
            Ok(p) => self.values[self.indptr[i] + p],
            Err(_) => T::zero(),
        }
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.row_indices(i).binary_search(&j).is_ok()
    }

    /// `(row, col, value)` in sorted `(row, col)` order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.rows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn support(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.triplets().map(|(i, j, _)| (i, j))
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.cols + 1];
        for &j in &self.indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.cols {
            counts[j + 1] += counts[j];
        }
        let indptr = counts.clone();
        let mut next = counts;
        let mut indices = vec![0; self.nnz()];
        let mut values = vec![T::zero(); self.nnz()];
        // Rows are visited in increasing order, so each output row is sorted.
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                let slot = next[j];
                indices[slot] = i;
                values[slot] = v;
                next[j] += 1;
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            indptr,
            indices,
            values,
        }
    }

    /// Row-wise (Gustavson) product. Accumulation order inside a row is
    /// fixed by the left operand's column order.
    pub fn matmul(&self, other: &SparseMatrix<T>) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        let mut acc = vec![T::zero(); other.cols];
        let mut touched = vec![false; other.cols];
        let mut cols_hit: Vec<usize> = Vec::new();
        for i in 0..self.rows {
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    if !touched[j] {
                        touched[j] = true;
                        cols_hit.push(j);
                    }
                    acc[j] = acc[j] + a * b;
                }
            }
            cols_hit.sort_unstable();
            for &j in &cols_hit {
                let v = acc[j];
                if !v.is_zero() {
                    out.indices.push(j);
                    out.values.push(v);
                }
                acc[j] = T::zero();
                touched[j] = false;
            }
            cols_hit.clear();
            out.indptr[i + 1] = out.indices.len();
        }
        Ok(out)
    }

    fn merge_with(
        &self,
        other: &SparseMatrix<T>,
        op: &'static str,
        f: impl Fn(Option<T>, Option<T>) -> Option<T>,
    ) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                op,
                left: self.shape(),
                right: other.shape(),
            });
        }
        let mut out = Self::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            let mut a = self.row(i).peekable();
            let mut b = other.row(i).peekable();
            loop {
                let (j, va, vb) = match (a.peek().copied(), b.peek().copied()) {
                    (None, None) => break,
                    (Some((ja, va)), None) => {
                        a.next();
                        (ja, Some(va), None)
                    }
                    (None, Some((jb, vb))) => {
                        b.next();
                        (jb, None, Some(vb))
                    }
                    (Some((ja, va)), Some((jb, vb))) => {
                        if ja < jb {
                            a.next();
                            (ja, Some(va), None)
                        } else if jb < ja {
                            b.next();
                            (jb, None, Some(vb))
                        } else {
                            a.next();
                            b.next();
                            (ja, Some(va), Some(vb))
                        }
                    }
                };
                if let Some(v) = f(va, vb) {
                    if !v.is_zero() {
                        out.indices.push(j);
                        out.values.push(v);
                    }
                }
            }
            out.indptr[i + 1] = out.indices.len();
        }
        Ok(out)
    }

    /// Entrywise sum.
    pub fn add(&self, other: &SparseMatrix<T>) -> Result<Self> {
        self.merge_with(other, "add", |a, b| match (a, b) {
            (Some(a), Some(b)) => Some(a + b),
            (a, b) => a.or(b),
        })
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|v| v * s)
    }

    /// Applies `f` to every stored value; zeros produced by `f` are dropped.
    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> SparseMatrix<U> {
        let mut out = SparseMatrix::<U>::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                let u = f(v);
                if !u.is_zero() {
                    out.indices.push(j);
                    out.values.push(u);
                }
            }
            out.indptr[i + 1] = out.indices.len();
        }
        out
    }

    /// Every stored entry becomes 1.
    pub fn binarize(&self) -> Self {
        self.map(|_| T::one())
    }

    /// Same support, values produced by `f(row, col)`.
    pub fn with_values<U: Scalar>(&self, mut f: impl FnMut(usize, usize) -> U) -> SparseMatrix<U> {
        let mut out = SparseMatrix::<U>::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for (j, _) in self.row(i) {
                let u = f(i, j);
                if !u.is_zero() {
                    out.indices.push(j);
                    out.values.push(u);
                }
            }
            out.indptr[i + 1] = out.indices.len();
        }
        out
    }

    pub fn set_self_loops(&self, policy: SelfLoopPolicy) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(match policy {
            SelfLoopPolicy::Keep => self.clone(),
            SelfLoopPolicy::Remove => self.filter(|i, j| i != j),
            SelfLoopPolicy::Add => {
                let missing = (0..self.rows)
                    .filter(|&i| !self.contains(i, i))
                    .map(|i| (i, i, T::one()));
                let extra = SparseMatrix::from_triplets(self.rows, self.cols, missing)?;
                self.add(&extra)?
            }
        })
    }

    /// Keeps entries whose position satisfies `keep`.
    pub fn filter(&self, keep: impl Fn(usize, usize) -> bool) -> Self {
        let mut out = Self::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                if keep(i, j) {
                    out.indices.push(j);
                    out.values.push(v);
                }
            }
            out.indptr[i + 1] = out.indices.len();
        }
        out
    }

    /// Support-wise OR; output is binary.
    pub fn union(&self, other: &SparseMatrix<T>) -> Result<Self> {
        self.merge_with(other, "union", |a, b| a.or(b).map(|_| T::one()))
    }

    /// Support-wise AND; output is binary.
    pub fn intersect(&self, other: &SparseMatrix<T>) -> Result<Self> {
        self.merge_with(other, "intersect", |a, b| match (a, b) {
            (Some(_), Some(_)) => Some(T::one()),
            _ => None,
        })
    }

    /// Entries of `self` whose position is not in `other`'s support.
    pub fn difference(&self, other: &SparseMatrix<T>) -> Result<Self> {
        self.merge_with(other, "difference", |a, b| match (a, b) {
            (Some(a), None) => Some(a),
            _ => None,
        })
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.rows.min(self.cols))
            .map(|i| self.get(i, i))
            .collect()
    }

    pub fn has_zero_diagonal(&self) -> bool {
        (0..self.rows.min(self.cols)).all(|i| !self.contains(i, i))
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && *self == self.transpose()
    }

    pub fn same_support<U: Scalar>(&self, other: &SparseMatrix<U>) -> bool {
        self.shape() == other.shape()
            && self.indptr == other.indptr
            && self.indices == other.indices
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).map(|(_, v)| to_f64(v)).sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for (_, j, v) in self.triplets() {
            sums[j] += to_f64(v);
        }
        sums
    }

    pub fn to_f64(&self) -> SparseMatrix<f64> {
        self.map(to_f64)
    }

    /// Symmetric degree normalisation `D_row^{-1/2} M D_col^{-1/2}`.
    /// Zero-degree rows and columns produce zero entries, never NaN.
    pub fn normalize_sym(&self) -> NormalizedMatrix {
        let rdeg = self.row_sums();
        let cdeg = self.col_sums();
        let inv = |d: f64| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 };
        let rinv: Vec<f64> = rdeg.into_iter().map(inv).collect();
        let cinv: Vec<f64> = cdeg.into_iter().map(inv).collect();
        let mut out = SparseMatrix::<f64>::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                let w = to_f64(v) * rinv[i] * cinv[j];
                if w != 0.0 {
                    out.indices.push(j);
                    out.values.push(w);
                }
            }
            out.indptr[i + 1] = out.indices.len();
        }
        NormalizedMatrix(out)
    }
}

impl<T: Scalar + Display> SparseMatrix<T> {
    /// Text dump: `rows cols nnz` header, then one `i j v` line per entry
    /// in sorted `(i, j)` order.
    pub fn to_dump(&self) -> String {
        let mut s = format!("{} {} {}\n", self.rows, self.cols, self.nnz());
        for (i, j, v) in self.triplets() {
            s.push_str(&format!("{i} {j} {v}\n"));
        }
        s
    }
}

impl<T: Scalar + FromStr> SparseMatrix<T> {
    pub fn from_dump(text: &str) -> Result<Self> {
        let file = "<matrix dump>";
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(n, l)| (n + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines
            .next()
            .ok_or_else(|| Error::parse(file, 1, "missing header"))?;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::parse(file, hline, format!("bad header: {e}")))?;
        let [rows, cols, nnz] = nums[..] else {
            return Err(Error::parse(file, hline, "header must be `rows cols nnz`"));
        };
        let mut triplets = Vec::with_capacity(nnz);
        for (ln, line) in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(Error::parse(file, ln, "expected `i j v`"));
            }
            let i = toks[0]
                .parse::<usize>()
                .map_err(|e| Error::parse(file, ln, e.to_string()))?;
            let j = toks[1]
                .parse::<usize>()
                .map_err(|e| Error::parse(file, ln, e.to_string()))?;
            let v = toks[2]
                .parse::<T>()
                .map_err(|_| Error::parse(file, ln, format!("bad value `{}`", toks[2])))?;
            triplets.push((i, j, v));
        }
        if triplets.len() != nnz {
            return Err(Error::parse(
                file,
                hline,
                format!("header says {nnz} entries, found {}", triplets.len()),
            ));
        }
        SparseMatrix::from_triplets(rows, cols, triplets)
    }
}

impl SparseMatrix<f64> {
    /// Sparse × dense product with a fixed per-row reduction order.
    pub fn mul_dense(&self, x: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, x.rows(), "sparse-dense shape mismatch");
        let mut out = DenseMatrix::zeros(self.rows, x.cols());
        for i in 0..self.rows {
            for (k, a) in self.row(i) {
                let src = x.row(k);
                for (o, b) in out.row_mut(i).iter_mut().zip(src) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix::from_vec(self.rows, self.cols, self.to_dense_vec())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

fn to_f64<T: ToPrimitive>(v: T) -> f64 {
    v.to_f64().expect("matrix value representable as f64")
}

/// A symmetric-degree-normalised matrix with entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedMatrix(SparseMatrix<f64>);

impl NormalizedMatrix {
    pub fn as_sparse(&self) -> &SparseMatrix<f64> {
        &self.0
    }

    pub fn into_sparse(self) -> SparseMatrix<f64> {
        self.0
    }

    pub fn mul_dense(&self, x: &DenseMatrix) -> DenseMatrix {
        self.0.mul_dense(x)
    }

    pub fn transpose(&self) -> NormalizedMatrix {
        NormalizedMatrix(self.0.transpose())
    }
}

/// A directed graph on nodes `0..n`. `adj[i][j]` counts edges `i → j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectedGraph {
    n: usize,
    adj: SparseMatrix<u64>,
}

impl DirectedGraph {
    /// Duplicate edges accumulate. The error names the 1-based position of
    /// the first offending edge in `edges`.
    pub fn from_edge_list(edges: &[(usize, usize)], n: usize) -> Result<Self> {
        for (pos, &(s, d)) in edges.iter().enumerate() {
            for node in [s, d] {
                if node >= n {
                    return Err(Error::NodeOutOfRange {
                        line: pos + 1,
                        node,
                        n,
                    });
                }
            }
        }
        let adj = SparseMatrix::from_triplets(n, n, edges.iter().map(|&(s, d)| (s, d, 1u64)))?;
        Ok(Self { n, adj })
    }

    /// Wraps an existing square count matrix.
    pub fn from_adjacency(adj: SparseMatrix<u64>) -> Result<Self> {
        if !adj.is_square() {
            return Err(Error::NotSquare {
                rows: adj.rows(),
                cols: adj.cols(),
            });
        }
        Ok(Self { n: adj.rows(), adj })
    }

    /// Parses the `src<TAB>dst` edge-list format with integer node ids.
    /// Blank lines and `#` comments are ignored. With `n = None` the node
    /// count is one more than the largest id seen.
    pub fn parse_edge_list(text: &str, n: Option<usize>) -> Result<Self> {
        let file = "<edge list>";
        let mut edges = Vec::new();
        let mut lines = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let ln = ln + 1;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let toks: Vec<&str> = body.split(['\t', ' ']).filter(|t| !t.is_empty()).collect();
            if toks.len() != 2 {
                return Err(Error::parse(file, ln, "expected `src<TAB>dst`"));
            }
            let parse = |t: &str| {
                t.parse::<usize>()
                    .map_err(|_| Error::parse(file, ln, format!("bad node id `{t}`")))
            };
            edges.push((parse(toks[0])?, parse(toks[1])?));
            lines.push(ln);
        }
        let n = n.unwrap_or_else(|| edges.iter().map(|&(s, d)| s.max(d) + 1).max().unwrap_or(0));
        match Self::from_edge_list(&edges, n) {
            Err(Error::NodeOutOfRange { line, node, n }) => Err(Error::NodeOutOfRange {
                line: lines[line - 1],
                node,
                n,
            }),
            other => other,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn adjacency(&self) -> &SparseMatrix<u64> {
        &self.adj
    }

    pub fn edge_count(&self) -> usize {
        self.adj.nnz()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj.support()
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.adj.row_nnz(i)
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for (_, j) in self.adj.support() {
            deg[j] += 1;
        }
        deg
    }

    /// Directed Erdős–Rényi graph: each ordered pair `(i, j)`, `i != j`,
    /// becomes an edge with probability `p`.
    pub fn random<R: rand::Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Self {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j && rng.random::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
        Self::from_edge_list(&edges, n).expect("generated ids are in range")
    }

    /// Binarised adjacency `A`.
    pub fn a(&self) -> SparseMatrix<u64> {
        self.adj.binarize()
    }

    /// Binarised `Aᵀ`.
    pub fn at(&self) -> SparseMatrix<u64> {
        self.adj.binarize().transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn six_node() -> DirectedGraph {
        DirectedGraph::from_edge_list(&[(0, 1), (2, 1), (3, 2), (4, 2), (5, 0)], 6).unwrap()
    }

    #[test]
    fn edge_list_builds_six_node_matrix() {
        let g = six_node();
        #[rustfmt::skip]
        let expect = [
            0, 1, 0, 0, 0, 0,
            0, 0, 0, 0, 0, 0,
            0, 1, 0, 0, 0, 0,
            0, 0, 1, 0, 0, 0,
            0, 0, 1, 0, 0, 0,
            1, 0, 0, 0, 0, 0u64,
        ];
        assert_eq!(g.adjacency().to_dense_vec(), expect);
    }

    #[test]
    fn empty_edge_list_gives_zero_matrix() {
        let g = DirectedGraph::from_edge_list(&[], 3).unwrap();
        assert_eq!(g.adjacency(), &SparseMatrix::zeros(3, 3));
    }

    #[test]
    fn duplicate_edges_accumulate() {
        let g = DirectedGraph::from_edge_list(&[(0, 1), (0, 1)], 2).unwrap();
        assert_eq!(g.adjacency().get(0, 1), 2);
        assert_eq!(g.adjacency().nnz(), 1);
    }

    #[test]
    fn out_of_range_edge_reports_position() {
        let err = DirectedGraph::from_edge_list(&[(0, 1), (1, 7)], 3).unwrap_err();
        assert!(matches!(
            err,
            Error::NodeOutOfRange {
                line: 2,
                node: 7,
                n: 3
            }
        ));
    }

    #[test]
    fn parse_edge_list_reports_file_line() {
        let text = "# header\n0\t1\n\n2\t9\n";
        let err = DirectedGraph::parse_edge_list(text, Some(3)).unwrap_err();
        assert!(
            matches!(
                err,
                Error::NodeOutOfRange {
                    line: 4,
                    node: 9,
                    ..
                }
            ),
            "{err}"
        );
        let err = DirectedGraph::parse_edge_list("0\tx\n", None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let g = DirectedGraph::parse_edge_list("0\t1 # trailing\n2\t0\n", None).unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn transpose_of_six_node() {
        let at = six_node().at();
        let support: Vec<_> = at.support().collect();
        assert_eq!(support, vec![(0, 5), (1, 0), (1, 2), (2, 3), (2, 4)]);
        assert_eq!(at.transpose(), six_node().a());
    }

    #[test]
    fn a_times_a_enumerates_two_paths() {
        let a = six_node().a();
        let aa = a.matmul(&a).unwrap();
        assert_eq!(
            aa.support().collect::<Vec<_>>(),
            vec![(3, 1), (4, 1), (5, 1)]
        );
        assert_eq!(a.matmul(&SparseMatrix::identity(6)).unwrap(), a);
    }

    #[test]
    fn matmul_rejects_bad_shapes() {
        let a = SparseMatrix::<u64>::zeros(2, 3);
        assert!(matches!(a.matmul(&a), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn binarize_is_idempotent() {
        let m = SparseMatrix::from_triplets(2, 2, [(0, 0, 2u64), (1, 0, 5)]).unwrap();
        let b = m.binarize();
        assert_eq!(b.to_dense_vec(), vec![1, 0, 1, 0]);
        assert_eq!(b.binarize(), b);
        assert!(SparseMatrix::<u64>::zeros(3, 3).binarize().is_zero());
    }

    #[test]
    fn self_loop_policies() {
        let z = SparseMatrix::<u64>::zeros(3, 3);
        assert_eq!(
            z.set_self_loops(SelfLoopPolicy::Add).unwrap(),
            SparseMatrix::identity(3)
        );
        let m = SparseMatrix::from_triplets(2, 2, [(0, 0, 3u64), (0, 1, 1)]).unwrap();
        assert_eq!(m.set_self_loops(SelfLoopPolicy::Keep).unwrap(), m);
        assert_eq!(
            m.set_self_loops(SelfLoopPolicy::Add).unwrap().diagonal(),
            vec![3, 1]
        );
        assert_eq!(
            m.set_self_loops(SelfLoopPolicy::Remove).unwrap().diagonal(),
            vec![0, 0]
        );
        let rect = SparseMatrix::<u64>::zeros(2, 3);
        assert!(matches!(
            rect.set_self_loops(SelfLoopPolicy::Add),
            Err(Error::NotSquare { rows: 2, cols: 3 })
        ));
    }

    #[test]
    fn union_and_intersection_on_six_node() {
        let g = six_node();
        let u = g.a().union(&g.at()).unwrap();
        assert_eq!(u.nnz(), 10);
        assert!(u.is_symmetric());
        assert!(g.a().intersect(&g.at()).unwrap().is_zero());
        let m = SparseMatrix::from_triplets(2, 2, [(0, 1, 4u64)]).unwrap();
        assert_eq!(m.intersect(&m).unwrap(), m.binarize());
        assert!(m.union(&SparseMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn normalize_sym_hand_values() {
        let g = six_node();
        let n = g.a().normalize_sym();
        assert_eq!(n.as_sparse().get(5, 0), 1.0);
        // node 1 has in-degree 2, sources 0 and 2 have out-degree 1
        assert!((n.as_sparse().get(0, 1) - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(
            SparseMatrix::<u64>::identity(4).normalize_sym().as_sparse(),
            &SparseMatrix::identity(4)
        );
        // node 1 has no out-edges -> empty row, no NaN
        assert_eq!(n.as_sparse().row_nnz(1), 0);
        assert!(n.as_sparse().values().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn dump_roundtrip() {
        let a = six_node().a();
        let text = a.to_dump();
        assert!(text.starts_with("6 6 5\n0 1 1\n"));
        assert_eq!(SparseMatrix::<u64>::from_dump(&text).unwrap(), a);
        assert!(SparseMatrix::<u64>::from_dump("2 2 2\n0 0 1\n").is_err());
    }

    #[test]
    fn mul_dense_matches_dense_product() {
        let g = six_node();
        let n = g.a().normalize_sym();
        let x = DenseMatrix::from_fn(6, 2, |i, j| (i as f64) - 2.0 * j as f64);
        let dense = n.as_sparse().to_dense().matmul(&x);
        assert!(n.mul_dense(&x).max_abs_diff(&dense) < 1e-15);
    }
}
