//! Node-classification datasets on disk.
//!
//! A dataset directory holds:
//!
//! * `graph.tsv`: `src<TAB>dst` per line, `#` comments allowed
//! * `features.csv`: `node_id,f_1,...,f_d`
//! * `labels.csv`: `node_id,label`
//! * `splits.json` (optional): `{"train": [...], "val": [...], "test": [...]}`
//!
//! A header row is skipped in either CSV if its first field is not an
//! integer. Without `splits.json` a seeded, stratified 60/20/20 split is
//! generated.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::graph::DirectedGraph;

/// Seed of the default split when no `splits.json` is present.
pub const DEFAULT_SPLIT_SEED: u64 = 0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Splits {
    /// Per-class 60/20/20 split. Every non-empty class keeps at least one
    /// training node.
    pub fn stratified(labels: &[usize], classes: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Splits {
            train: Vec::new(),
            val: Vec::new(),
            test: Vec::new(),
        };
        for c in 0..classes {
            let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
            if members.is_empty() {
                continue;
            }
            members.shuffle(&mut rng);
            let len = members.len() as f64;
            let train = ((0.6 * len).round() as usize).max(1);
            let val = ((0.2 * len).round() as usize).min(members.len() - train);
            out.train.extend_from_slice(&members[..train]);
            out.val.extend_from_slice(&members[train..train + val]);
            out.test.extend_from_slice(&members[train + val..]);
        }
        out.train.sort_unstable();
        out.val.sort_unstable();
        out.test.sort_unstable();
        out
    }

    fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for (name, set) in [
            ("train", &self.train),
            ("val", &self.val),
            ("test", &self.test),
        ] {
            for &i in set {
                if i >= n {
                    return Err(Error::invalid(format!(
                        "{name} split index {i} out of range for {n} nodes"
                    )));
                }
                if seen[i] {
                    return Err(Error::invalid(format!(
                        "node {i} appears in more than one split"
                    )));
                }
                seen[i] = true;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeDataset {
    pub graph: DirectedGraph,
    pub features: DenseMatrix,
    pub labels: Vec<usize>,
    pub classes: usize,
    pub splits: Splits,
}

impl NodeDataset {
    /// Checks shapes, label range and split consistency. `classes` is taken
    /// as one more than the largest label.
    pub fn new(
        graph: DirectedGraph,
        features: DenseMatrix,
        labels: Vec<usize>,
        splits: Option<Splits>,
    ) -> Result<Self> {
        let n = graph.n();
        if features.rows() != n || labels.len() != n {
            return Err(Error::invalid(format!(
                "graph has {n} nodes but {} feature rows and {} labels",
                features.rows(),
                labels.len()
            )));
        }
        let classes = labels.iter().max().map_or(0, |&m| m + 1);
        if classes < 2 {
            return Err(Error::invalid("at least two classes are required"));
        }
        let splits =
            splits.unwrap_or_else(|| Splits::stratified(&labels, classes, DEFAULT_SPLIT_SEED));
        splits.validate(n)?;
        Ok(Self {
            graph,
            features,
            labels,
            classes,
            splits,
        })
    }

    /// The six-node worked example: edges 0→1, 2→1, 3→2, 4→2, 5→0,
    /// one-hot features and labels `[0, 0, 0, 1, 1, 1]`.
    pub fn toy() -> Self {
        let graph = DirectedGraph::from_edge_list(&[(0, 1), (2, 1), (3, 2), (4, 2), (5, 0)], 6)
            .expect("toy edges");
        Self::new(
            graph,
            DenseMatrix::identity(6),
            vec![0, 0, 0, 1, 1, 1],
            None,
        )
        .expect("toy dataset")
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    /// Same dataset with every feature set to zero.
    pub fn zero_input(&self) -> Self {
        Self {
            features: DenseMatrix::zeros(self.features.rows(), self.features.cols()),
            ..self.clone()
        }
    }

    /// Writes the four files understood by [`load_dataset`].
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let mut graph = String::from("# src\tdst\n");
        for (s, d) in self.graph.edges() {
            graph.push_str(&format!("{s}\t{d}\n"));
        }
        write(&dir.join("graph.tsv"), &graph)?;
        let mut feats = String::new();
        for i in 0..self.n() {
            feats.push_str(&i.to_string());
            for v in self.features.row(i) {
                feats.push_str(&format!(",{v:?}"));
            }
            feats.push('\n');
        }
        write(&dir.join("features.csv"), &feats)?;
        let labels: String = self
            .labels
            .iter()
            .enumerate()
            .map(|(i, l)| format!("{i},{l}\n"))
            .collect();
        write(&dir.join("labels.csv"), &format!("node_id,label\n{labels}"))?;
        write(
            &dir.join("splits.json"),
            &serde_json::to_string_pretty(&self.splits)?,
        )
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

/// Rows of a CSV file as `(line, node_id, remaining fields)`.
fn csv_rows(file: &str, text: &str) -> Result<Vec<(usize, usize, Vec<String>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(file, line, e.to_string())
        })?;
        let line = record.position().map_or(k + 1, |p| p.line() as usize);
        let first = record.get(0).unwrap_or("");
        let id = match first.parse::<usize>() {
            Ok(id) => id,
            Err(_) if k == 0 => continue,
            Err(_) => return Err(Error::parse(file, line, format!("bad node id `{first}`"))),
        };
        rows.push((
            line,
            id,
            record.iter().skip(1).map(str::to_string).collect(),
        ));
    }
    Ok(rows)
}

/// Places each row at its node id, requiring ids `0..n` exactly once.
fn by_node<T>(file: &str, rows: Vec<(usize, usize, T)>, n: usize) -> Result<Vec<T>> {
    let mut slots: Vec<Option<T>> = (0..n).map(|_| None).collect();
    for (line, id, v) in rows {
        if id >= n {
            return Err(Error::parse(
                file,
                line,
                format!("node id {id} out of range for {n} nodes"),
            ));
        }
        if slots[id].is_some() {
            return Err(Error::parse(file, line, format!("duplicate node id {id}")));
        }
        slots[id] = Some(v);
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| Error::parse(file, 0, format!("missing row for node {i}"))))
        .collect()
}

pub fn load_dataset(dir: &Path) -> Result<NodeDataset> {
    let label_rows = csv_rows("labels.csv", &read(&dir.join("labels.csv"))?)?;
    let n = label_rows.len();
    let mut parsed = Vec::with_capacity(n);
    for (line, id, fields) in label_rows {
        if fields.len() != 1 {
            return Err(Error::parse("labels.csv", line, "expected `node_id,label`"));
        }
        let label = fields[0]
            .parse::<usize>()
            .map_err(|_| Error::parse("labels.csv", line, format!("bad label `{}`", fields[0])))?;
        parsed.push((line, id, label));
    }
    let labels = by_node("labels.csv", parsed, n)?;

    let feature_rows = csv_rows("features.csv", &read(&dir.join("features.csv"))?)?;
    if feature_rows.len() != n {
        let line = feature_rows.last().map_or(0, |r| r.0);
        return Err(Error::parse(
            "features.csv",
            line,
            format!("{} feature rows but {n} labelled nodes", feature_rows.len()),
        ));
    }
    let d = feature_rows.first().map_or(0, |r| r.2.len());
    if d == 0 {
        return Err(Error::parse("features.csv", 1, "no feature columns"));
    }
    let mut parsed = Vec::with_capacity(n);
    for (line, id, fields) in feature_rows {
        if fields.len() != d {
            return Err(Error::parse(
                "features.csv",
                line,
                format!("expected {d} features, found {}", fields.len()),
            ));
        }
        let values = fields
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        Error::parse("features.csv", line, format!("bad feature value `{f}`"))
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        parsed.push((line, id, values));
    }
    let features = DenseMatrix::from_rows(&by_node("features.csv", parsed, n)?);

    let graph = DirectedGraph::parse_edge_list(&read(&dir.join("graph.tsv"))?, Some(n)).map_err(
        |e| match e {
            Error::Parse { line, message, .. } => Error::parse("graph.tsv", line, message),
            Error::NodeOutOfRange { line, node, n } => Error::parse(
                "graph.tsv",
                line,
                format!("node {node} out of range for {n} nodes"),
            ),
            other => other,
        },
    )?;

    let split_path = dir.join("splits.json");
    let splits = if split_path.exists() {
        Some(
            serde_json::from_str::<Splits>(&read(&split_path)?)
                .map_err(|e| Error::parse("splits.json", e.line(), e.to_string()))?,
        )
    } else {
        None
    };
    let classes = labels.iter().max().map_or(0, |&m| m + 1);
    if classes < 2 {
        return Err(Error::parse(
            "labels.csv",
            0,
            "at least two classes are required",
        ));
    }
    NodeDataset::new(graph, features, labels, splits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stratified_split_is_disjoint_and_covering() {
        let labels: Vec<usize> = (0..50).map(|i| i % 3).collect();
        let s = Splits::stratified(&labels, 3, 4);
        s.validate(50).unwrap();
        assert_eq!(s.train.len() + s.val.len() + s.test.len(), 50);
        assert_eq!(s.train.len(), 30);
        assert_eq!(s, Splits::stratified(&labels, 3, 4));
    }

    #[test]
    fn toy_dataset_shape() {
        let ds = NodeDataset::toy();
        assert_eq!((ds.n(), ds.feature_dim(), ds.classes), (6, 6, 2));
    }

    #[test]
    fn overlapping_splits_rejected() {
        let s = Splits {
            train: vec![0, 1],
            val: vec![1],
            test: vec![],
        };
        assert!(s.validate(3).is_err());
    }
}
