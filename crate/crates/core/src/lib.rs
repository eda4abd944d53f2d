//! Activity classification for livestock collar accelerometers.
//!
//! The crate turns raw tri-axial acceleration streams into windowed feature
//! tables, trains and selects classifiers for the merged activity classes
//! (STN, REL, RUS, ETC), explains predictions with Shapley values and scores
//! feature stability between data splits with the two-sample KS statistic.
//!
//! Modules follow the pipeline order:
//!
//! * [`dataset`] ingestion, gateway replay, cleaning, label mapping, splits and
//!   a synthetic herd generator
//! * [`signal`] Savitzky-Golay smoothing, wavelet decomposition, energy, entropy
//! * [`features`] sliding-window feature extraction and lag augmentation
//! * [`models`] KNN, random forest, gradient-boosted trees, metrics and grid search
//! * [`explain`] Shapley attribution, per-class summaries, KS stability
//! * [`cli`] the `herdwatch` command-line pipeline

pub mod cli;
pub mod dataset;
pub mod error;
pub mod explain;
pub mod features;
pub mod models;
pub mod signal;

pub use error::{Error, Result};
