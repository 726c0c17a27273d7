//! Seeded stochastic-block-style digraphs with class-correlated features.
//!
//! * Homophilic: edge `i → j` with probability `p_in` inside a class and
//!   `p_out` across classes.
//! * Heterophilic: only a subset of "receiver" nodes ever gets in-edges.
//!   Each node sends `out_degree` edges, mostly to receivers of the next
//!   class `(c + 1) mod C`, so reverse aggregation sees nothing for every
//!   non-receiver.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::harness::dataset::{NodeDataset, Splits};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthKind {
    Homophilic,
    Heterophilic,
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "homophilic" => Ok(Self::Homophilic),
            "heterophilic" => Ok(Self::Heterophilic),
            _ => Err(Error::invalid(format!("unknown dataset kind `{s}`"))),
        }
    }
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Homophilic => "homophilic",
            Self::Heterophilic => "heterophilic",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub kind: SynthKind,
    pub n: usize,
    pub classes: usize,
    pub seed: u64,
    pub feature_dim: usize,
    /// Per-dimension std of the noise around each class mean.
    pub noise: f64,
    pub p_in: f64,
    pub p_out: f64,
    pub out_degree: usize,
    /// Heterophilic only: share of nodes that never receive an edge.
    pub zero_in_fraction: f64,
    /// Heterophilic only: probability an edge ignores the class rule.
    pub edge_noise: f64,
}

impl SynthParams {
    pub fn new(kind: SynthKind, n: usize, classes: usize, seed: u64) -> Self {
        Self {
            kind,
            n,
            classes,
            seed,
            feature_dim: 16,
            noise: 2.0,
            p_in: 0.04,
            p_out: 0.004,
            out_degree: 4,
            zero_in_fraction: 0.5,
            edge_noise: 0.1,
        }
    }

    fn validate(&self) -> Result<()> {
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if self.n < 50 {
            return Err(Error::invalid(format!(
                "n = {} below the minimum of 50",
                self.n
            )));
        }
        if self.classes < 2 || self.classes * 2 > self.n {
            return Err(Error::invalid(format!(
                "classes = {} not in [2, n/2]",
                self.classes
            )));
        }
        if self.feature_dim == 0 || self.noise.is_nan() || self.noise < 0.0 {
            return Err(Error::invalid(
                "feature_dim must be positive and noise >= 0",
            ));
        }
        if !prob(self.p_in)
            || !prob(self.p_out)
            || !prob(self.edge_noise)
            || !(0.0..1.0).contains(&self.zero_in_fraction)
        {
            return Err(Error::invalid("probabilities must lie in [0, 1]"));
        }
        if self.out_degree == 0 {
            return Err(Error::invalid("out_degree must be positive"));
        }
        Ok(())
    }
}

pub fn synth_dataset(p: &SynthParams) -> Result<NodeDataset> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let labels: Vec<usize> = (0..p.n).map(|i| i % p.classes).collect();
    let edges = match p.kind {
        SynthKind::Homophilic => homophilic_edges(p, &labels, &mut rng),
        SynthKind::Heterophilic => heterophilic_edges(p, &labels, &mut rng),
    };
    let graph = DirectedGraph::from_edge_list(&edges, p.n)?;
    let means = DenseMatrix::random_normal(p.classes, p.feature_dim, 1.0, &mut rng);
    let noise = DenseMatrix::random_normal(p.n, p.feature_dim, p.noise, &mut rng);
    let features = DenseMatrix::from_fn(p.n, p.feature_dim, |i, k| {
        means.get(labels[i], k) + noise.get(i, k)
    });
    // a fresh draw, not p.seed: the receiver shuffle above starts from the
    // same stream and would otherwise line up with the training set
    let splits = Splits::stratified(&labels, p.classes, rng.random());
    NodeDataset::new(graph, features, labels, Some(splits))
}

fn homophilic_edges(
    p: &SynthParams,
    labels: &[usize],
    rng: &mut ChaCha8Rng,
) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for i in 0..p.n {
        for j in 0..p.n {
            if i == j {
                continue;
            }
            let prob = if labels[i] == labels[j] {
                p.p_in
            } else {
                p.p_out
            };
            if rng.random::<f64>() < prob {
                edges.push((i, j));
            }
        }
    }
    edges
}

fn heterophilic_edges(
    p: &SynthParams,
    labels: &[usize],
    rng: &mut ChaCha8Rng,
) -> Vec<(usize, usize)> {
    let mut receivers: Vec<Vec<usize>> = vec![Vec::new(); p.classes];
    for (c, slot) in receivers.iter_mut().enumerate() {
        let mut members: Vec<usize> = (0..p.n).filter(|&i| labels[i] == c).collect();
        members.shuffle(rng);
        let keep = (((1.0 - p.zero_in_fraction) * members.len() as f64).round() as usize).max(1);
        members.truncate(keep);
        members.sort_unstable();
        *slot = members;
    }
    let all: Vec<usize> = receivers.iter().flatten().copied().collect();
    let mut edges = Vec::new();
    for i in 0..p.n {
        let target_class = (labels[i] + 1) % p.classes;
        let mut chosen = Vec::with_capacity(p.out_degree);
        // bounded retries keep tiny receiver pools from looping forever
        for _ in 0..p.out_degree * 20 {
            if chosen.len() == p.out_degree {
                break;
            }
            let pool = if rng.random::<f64>() < p.edge_noise {
                &all
            } else {
                &receivers[target_class]
            };
            let j = pool[rng.random_range(0..pool.len())];
            if j != i && !chosen.contains(&j) {
                chosen.push(j);
            }
        }
        edges.extend(chosen.into_iter().map(|j| (i, j)));
    }
    edges
}
