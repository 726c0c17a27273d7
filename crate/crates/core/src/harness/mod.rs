//! Datasets, training, grid search, statistics and verification suites.

pub mod dataset;
pub mod grid;
pub mod homophily;
pub mod report;
pub mod synth;
pub mod train;
pub mod verify;

pub use dataset::{load_dataset, NodeDataset, Splits};
pub use grid::{grid_search, GridReport, GridSpec};
pub use homophily::{directional_homophily, HomophilyReport};
pub use synth::{synth_dataset, SynthKind, SynthParams};
pub use train::{config_hash, train, train_model, train_repeats, RepeatSummary, RunReport};
pub use verify::{verify, Suite, VerifyReport};
