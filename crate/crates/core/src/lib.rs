//! Machine learning where every dataset, model and evaluation carries a
//! complete, hashable record of how it was produced.
//!
//! Examples are sparse maps from feature names to values. Datasets record
//! their source and transformations; trainers record their configuration,
//! seed and how many times they have run; models embed all of it. From a
//! model's provenance the configuration can be extracted, the model can be
//! retrained bit-for-bit, and confidential parts can be replaced by a hash.

pub mod data;
pub mod dataset;
pub mod domain;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod example;
pub mod model;
pub mod optimize;
mod params;
pub mod persist;
pub mod provenance;
pub mod repro;
pub mod rng;
pub mod trees;

pub use dataset::Dataset;
pub use domain::{FeatureDomain, FeatureStats, OutputDomain, RealStats};
pub use error::{Error, ErrorClass, Result};
pub use example::{Example, FeatureValue, Output, Task};
pub use model::{argmax_label, Model, ModelParams, Prediction, RawOutput, Trainer};
