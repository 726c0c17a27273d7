use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::harness::dataset::NodeDataset;
use crate::model::{Mode, PreparedGraph, ScaleNet, ScaleNetConfig};
use crate::nn::{accuracy, softmax_cross_entropy, Adam, Parameterized};
use crate::util::short_hash;

/// Keeps dropout draws independent of the initialisation stream.
const DROPOUT_STREAM: u64 = 0x5eed_d20b;

/// Hash of the config's canonical JSON (struct field order).
pub fn config_hash(cfg: &ScaleNetConfig) -> String {
    short_hash(
        serde_json::to_string(cfg)
            .expect("config serialises")
            .as_bytes(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config_hash: String,
    pub seed: u64,
    pub epochs_run: usize,
    /// Epoch (0-based) whose parameters were kept.
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
    pub test_accuracy: f64,
    pub param_count: usize,
    /// Set when training diverged.
    pub failed: Option<String>,
    /// Not serialised, so reports stay reproducible.
    #[serde(skip)]
    pub wall_seconds: f64,
}

impl RunReport {
    pub fn succeeded(&self) -> bool {
        self.failed.is_none()
    }
}

/// Full-batch Adam training with early stopping on validation loss. The
/// parameters from the epoch with the lowest validation loss are kept. A
/// non-finite loss ends the run and marks the report failed.
pub fn train_model(
    ds: &NodeDataset,
    cfg_in: &ScaleNetConfig,
    seed: u64,
) -> Result<(ScaleNet, RunReport)> {
    let started = Instant::now();
    let cfg = ScaleNetConfig {
        seed,
        ..cfg_in.clone()
    };
    let graph = PreparedGraph::new(&ds.graph, &cfg)?;
    let mut model = ScaleNet::new(&cfg, ds.feature_dim(), ds.classes)?;
    let mut adam = Adam::new(cfg.lr, cfg.weight_decay);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ DROPOUT_STREAM);
    let x = &ds.features;
    let labels = &ds.labels;
    let train_idx = &ds.splits.train;
    let val_idx = if ds.splits.val.is_empty() {
        train_idx
    } else {
        &ds.splits.val
    };

    let mut report = RunReport {
        config_hash: config_hash(cfg_in),
        seed,
        epochs_run: 0,
        best_epoch: 0,
        best_val_loss: f64::INFINITY,
        train_loss: Vec::new(),
        val_loss: Vec::new(),
        train_accuracy: 0.0,
        val_accuracy: 0.0,
        test_accuracy: 0.0,
        param_count: model.param_count(),
        failed: None,
        wall_seconds: 0.0,
    };
    let mut best = model.clone();
    let mut since_best = 0;
    for epoch in 0..cfg.epochs {
        model.zero_grad();
        let (out, cache) = model.forward(&graph, x, Mode::Train(&mut rng))?;
        let (loss, dlogits) = softmax_cross_entropy(&out.logits, labels, train_idx);
        report.epochs_run = epoch + 1;
        if !loss.is_finite() {
            report.failed = Some(format!("non-finite training loss at epoch {epoch}"));
            break;
        }
        model.backward(&graph, &cache, &dlogits);
        adam.step(&mut model);
        let eval = model.predict(&graph, x)?;
        let (val_loss, _) = softmax_cross_entropy(&eval.logits, labels, val_idx);
        report.train_loss.push(loss);
        report.val_loss.push(val_loss);
        if !val_loss.is_finite() {
            report.failed = Some(format!("non-finite validation loss at epoch {epoch}"));
            break;
        }
        if val_loss < report.best_val_loss {
            report.best_val_loss = val_loss;
            report.best_epoch = epoch;
            best = model.clone();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    let eval = best.predict(&graph, x)?;
    report.train_accuracy = accuracy(&eval.logits, labels, train_idx);
    report.val_accuracy = accuracy(&eval.logits, labels, val_idx);
    report.test_accuracy = accuracy(&eval.logits, labels, &ds.splits.test);
    report.wall_seconds = started.elapsed().as_secs_f64();
    Ok((best, report))
}

pub fn train(ds: &NodeDataset, cfg: &ScaleNetConfig, seed: u64) -> Result<RunReport> {
    Ok(train_model(ds, cfg, seed)?.1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatSummary {
    pub runs: Vec<RunReport>,
    pub mean_test_accuracy: f64,
    /// Sample standard deviation; zero for a single run.
    pub std_test_accuracy: f64,
}

/// Runs seeds `seed, seed+1, …, seed+repeats-1`.
pub fn train_repeats(
    ds: &NodeDataset,
    cfg: &ScaleNetConfig,
    seed: u64,
    repeats: usize,
) -> Result<RepeatSummary> {
    let runs = (0..repeats.max(1) as u64)
        .map(|k| train(ds, cfg, seed + k))
        .collect::<Result<Vec<_>>>()?;
    let accs: Vec<f64> = runs.iter().map(|r| r.test_accuracy).collect();
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    let std = if accs.len() > 1 {
        (accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (accs.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(RepeatSummary {
        runs,
        mean_test_accuracy: mean,
        std_test_accuracy: std,
    })
}
