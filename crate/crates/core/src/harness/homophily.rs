use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::SelfLoopPolicy;
use crate::harness::dataset::NodeDataset;
use crate::scale::named_matrix;

/// Nodes split by whether the majority label among their aggregated
/// neighbours matches their own.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomophilyReport {
    pub matrix: String,
    pub homo: usize,
    pub hetero: usize,
    pub no_neigh: usize,
}

impl HomophilyReport {
    pub fn total(&self) -> usize {
        self.homo + self.hetero + self.no_neigh
    }
}

/// Node `i` aggregates from `{j : M(i, j) ≠ 0}`. A tie for the majority
/// label counts as hetero.
pub fn directional_homophily(
    ds: &NodeDataset,
    name: &str,
    policy: SelfLoopPolicy,
) -> Result<HomophilyReport> {
    let m = named_matrix(&ds.graph, name, policy)?;
    let mut report = HomophilyReport {
        matrix: name.to_string(),
        homo: 0,
        hetero: 0,
        no_neigh: 0,
    };
    let mut counts = vec![0usize; ds.classes];
    for i in 0..ds.n() {
        let neigh = m.row_indices(i);
        if neigh.is_empty() {
            report.no_neigh += 1;
            continue;
        }
        counts.fill(0);
        for &j in neigh {
            counts[ds.labels[j]] += 1;
        }
        let best = *counts.iter().max().expect("classes >= 2");
        let winners = counts.iter().filter(|&&c| c == best).count();
        if winners == 1 && counts[ds.labels[i]] == best {
            report.homo += 1;
        } else {
            report.hetero += 1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::DenseMatrix;
    use crate::graph::DirectedGraph;

    #[test]
    fn edgeless_graph_has_no_neighbours() {
        let g = DirectedGraph::from_edge_list(&[], 4).unwrap();
        let ds = NodeDataset::new(g, DenseMatrix::zeros(4, 1), vec![0, 1, 0, 1], None).unwrap();
        for name in ["A", "A^T", "AA^T"] {
            let r = directional_homophily(&ds, name, SelfLoopPolicy::Keep).unwrap();
            assert_eq!(r.no_neigh, 4);
        }
    }

    #[test]
    fn tie_counts_as_hetero() {
        // 0 -> {1, 2} with labels 0 | 0, 1
        let g = DirectedGraph::from_edge_list(&[(0, 1), (0, 2)], 3).unwrap();
        let ds = NodeDataset::new(g, DenseMatrix::zeros(3, 1), vec![0, 0, 1], None).unwrap();
        let r = directional_homophily(&ds, "A", SelfLoopPolicy::Keep).unwrap();
        assert_eq!((r.homo, r.hetero, r.no_neigh), (0, 1, 2));
    }

    #[test]
    fn unknown_matrix_name() {
        assert!(directional_homophily(&NodeDataset::toy(), "B", SelfLoopPolicy::Keep).is_err());
    }
}
