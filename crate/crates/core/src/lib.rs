//! Perceptron variants with provable margin guarantees, and the experiments
//! built on the perceptron's compression property.

pub mod compression;
pub mod dataset;
pub mod error;
pub mod io;
pub mod linalg;
pub mod mlp;
pub mod oracle;
pub mod planted;
pub mod projection;
pub mod report;
pub mod separation;
pub mod suite;
pub mod trace;
pub mod variants;

pub use dataset::{lift, margin_report, Hyperplane, Label, LabeledDataset, MarginReport};
pub use error::{Error, Result};
pub use planted::{generate_planted, PlantedDistribution};
pub use report::{BoundCheck, TrainReport};
pub use trace::{UpdateStep, UpdateTrace};
pub use variants::{Algorithm, ScanOrder, TrainResult, VariantConfig};
