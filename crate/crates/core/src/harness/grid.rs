//! Grid search over a base config.
//!
//! ```json
//! {"base": { ...config... },
//!  "axes": {"self_loops": ["add", "remove"], "alpha": [0.5, [1.0, 0.0, 2.0]],
//!           "comb1": ["sum"], "comb2": ["last", "jk_cat"],
//!           "batchnorm": [false, true], "activation": [true], "layers": [1, 2, 3]}}
//! ```
//!
//! A scalar `alpha` or `self_loops` value applies to every branch; an alpha
//! array sets one value per branch. Missing axes keep the base value.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SelfLoopPolicy;
use crate::harness::dataset::NodeDataset;
use crate::harness::train::{config_hash, train, RunReport};
use crate::model::{Comb1, Comb2, MixAlpha, ScaleNetConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaChoice {
    Uniform(f64),
    PerBranch(Vec<f64>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridAxes {
    pub self_loops: Option<Vec<SelfLoopPolicy>>,
    pub alpha: Option<Vec<AlphaChoice>>,
    pub comb1: Option<Vec<Comb1>>,
    pub comb2: Option<Vec<Comb2>>,
    pub batchnorm: Option<Vec<bool>>,
    pub activation: Option<Vec<bool>>,
    pub layers: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub base: ScaleNetConfig,
    #[serde(default)]
    pub axes: GridAxes,
}

/// Cartesian product of `choices` applied through `apply`.
fn expand_axis<T: Clone>(
    configs: Vec<ScaleNetConfig>,
    choices: &Option<Vec<T>>,
    apply: impl Fn(&mut ScaleNetConfig, &T) -> Result<()>,
) -> Result<Vec<ScaleNetConfig>> {
    let Some(choices) = choices else {
        return Ok(configs);
    };
    if choices.is_empty() {
        return Err(Error::invalid("grid axis has no values"));
    }
    let mut out = Vec::with_capacity(configs.len() * choices.len());
    for cfg in &configs {
        for c in choices {
            let mut next = cfg.clone();
            apply(&mut next, c)?;
            out.push(next);
        }
    }
    Ok(out)
}

impl GridSpec {
    /// All configurations, in axis-major order.
    pub fn expand(&self) -> Result<Vec<ScaleNetConfig>> {
        self.base.validate()?;
        let a = &self.axes;
        let mut cfgs = vec![self.base.clone()];
        cfgs = expand_axis(cfgs, &a.self_loops, |c, p| {
            c.branches.iter_mut().for_each(|b| b.self_loops = *p);
            Ok(())
        })?;
        cfgs = expand_axis(cfgs, &a.alpha, |c, choice| {
            match choice {
                AlphaChoice::Uniform(v) => {
                    c.branches.iter_mut().for_each(|b| b.alpha = MixAlpha(*v))
                }
                AlphaChoice::PerBranch(vs) => {
                    if vs.len() != c.branches.len() {
                        return Err(Error::invalid(format!(
                            "alpha list has {} values for {} branches",
                            vs.len(),
                            c.branches.len()
                        )));
                    }
                    c.branches
                        .iter_mut()
                        .zip(vs)
                        .for_each(|(b, v)| b.alpha = MixAlpha(*v));
                }
            }
            Ok(())
        })?;
        cfgs = expand_axis(cfgs, &a.comb1, |c, v| {
            c.comb1 = *v;
            Ok(())
        })?;
        cfgs = expand_axis(cfgs, &a.comb2, |c, v| {
            c.comb2 = *v;
            Ok(())
        })?;
        cfgs = expand_axis(cfgs, &a.batchnorm, |c, v| {
            c.batchnorm = *v;
            Ok(())
        })?;
        cfgs = expand_axis(cfgs, &a.activation, |c, v| {
            c.activation = *v;
            Ok(())
        })?;
        cfgs = expand_axis(cfgs, &a.layers, |c, v| {
            c.layers = *v;
            Ok(())
        })?;
        for c in &cfgs {
            c.validate()?;
        }
        Ok(cfgs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub rank: usize,
    pub config_hash: String,
    pub config: ScaleNetConfig,
    pub report: RunReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub rows: Vec<GridRow>,
    /// Top-ranked successful run.
    pub best: Option<GridRow>,
}

/// Trains every configuration (in parallel) with the same seed. Rows are
/// ranked by validation accuracy, then fewer parameters, then the config's
/// canonical JSON; failed runs sort last.
pub fn grid_search(ds: &NodeDataset, spec: &GridSpec, seed: u64) -> Result<GridReport> {
    let cfgs = spec.expand()?;
    let reports = cfgs
        .par_iter()
        .map(|cfg| train(ds, cfg, seed))
        .collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<(String, GridRow)> = cfgs
        .into_iter()
        .zip(reports)
        .map(|(config, report)| {
            let key = serde_json::to_string(&config).expect("config serialises");
            let row = GridRow {
                rank: 0,
                config_hash: config_hash(&config),
                config,
                report,
            };
            (key, row)
        })
        .collect();
    rows.sort_by(|(ka, a), (kb, b)| {
        let score = |r: &GridRow| {
            if r.report.succeeded() {
                r.report.val_accuracy
            } else {
                -1.0
            }
        };
        score(b)
            .total_cmp(&score(a))
            .then(a.report.param_count.cmp(&b.report.param_count))
            .then(ka.cmp(kb))
    });
    let rows: Vec<GridRow> = rows
        .into_iter()
        .enumerate()
        .map(|(k, (_, mut row))| {
            row.rank = k + 1;
            row
        })
        .collect();
    let best = rows.iter().find(|r| r.report.succeeded()).cloned();
    Ok(GridReport { rows, best })
}
