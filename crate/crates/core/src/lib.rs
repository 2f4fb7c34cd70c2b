//! Two-stage, confidence-gated ensemble classification over image feature vectors.
//!
//! The crate covers the full desk-scale pipeline: feature files and image
//! preprocessing, stratified splitting and random undersampling, a family of
//! base learners (softmax head, Gaussian naive Bayes, KNN, CART, random forest,
//! SAMME AdaBoost), a histogram gradient-boosted tree engine used as the
//! refinement stage, the cascade decision rule itself, and evaluation reports.
//!
//! Data-parallel inner loops (forest trees, GBDT histograms, batch prediction
//! and extraction) run on rayon when the default `rayon` feature is enabled
//! and fall back to sequential iteration otherwise. Results are identical in
//! both modes.

pub mod cascade;
pub mod classic;
pub mod data;
pub mod error;
pub mod eval;
pub mod features;
pub mod gbdt;
pub mod linear;
pub mod model;
mod par;
pub mod rng;
pub mod synth;

pub use cascade::{CascadeModel, RefineScope, Route, RoutedPrediction};
pub use data::{Dataset, SplitResult};
pub use error::{Error, Result};
pub use model::{ClassifierModel, ModelKind};
