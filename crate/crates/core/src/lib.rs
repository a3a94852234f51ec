//! Subject-enveloped deep prototype learning.
//!
//! Every subject contributes an [`Envelope`] of feature segments. The pipeline
//! prunes low-quality segment positions with Relief weights, repeatedly
//! reconstructs each envelope into one fewer prototype with fuzzy c-means
//! coupled to a linear-kernel MMD penalty, selects stitched features per layer,
//! trains one classifier per layer and fuses the per-layer labels with an
//! L1-penalized weighting.
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`dataset`] | envelopes, ingestion, stitching |
//! | [`relief`] | nearest hit/miss weight engine |
//! | [`prune`] | global segment-position pruning |
//! | [`fcm`] | MMD-constrained fuzzy c-means |
//! | [`deep_space`] | layer construction and stitched feature selection |
//! | [`classifiers`] | linear SVM, KNN, ELM |
//! | [`fusion`] | sparse decision-level fusion |
//! | [`evaluation`] | folds, metrics, experiment runner |
//! | [`config`] / [`report`] / [`synth`] | run configuration, exported files, synthetic data |

pub mod classifiers;
pub mod config;
pub mod dataset;
pub mod deep_space;
pub mod evaluation;
pub mod fcm;
pub mod fusion;
pub mod linalg;
pub mod prune;
pub mod relief;
pub mod report;
pub mod synth;

mod error;

pub use dataset::{Dataset, Envelope, Label, Schema, StitchedDataset};
pub use error::{Error, Result};
