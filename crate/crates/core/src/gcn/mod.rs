//! Graph-convolutional edge predictor with a route decoder.
//!
//! The pipeline condenses an instance to a single-depot graph (the start/end
//! depot copies of the arc-flow model are one geometric place), featurizes
//! nodes, runs a small graph convolutional network to score every undirected
//! edge, and decodes the resulting probability heatmap into capacity-feasible
//! routes by beam search. Training is supervised on exact optima.

pub mod data;
pub mod decode;
pub mod graph;
pub mod loss;
pub mod model;
pub mod train;

pub use data::{make_training_example, node_features, oracle_labeled_dataset, Example, FEATURE_DIM};
pub use decode::{decode_routes, predict_routes};
pub use graph::{build_adjacency, normalized_adjacency};
pub use loss::{class_weight, edge_loss};
pub use model::{Forward, GcnConfig, GcnModel};
pub use train::{
    dataset_loss, gradient_check, train, TrainConfig, TrainReport, GRADIENT_CHECK_TOL,
};

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum GcnError {
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("shape mismatch at {layer}: {details}")]
    Shape { layer: String, details: String },
    #[error("loss became non-finite at epoch {epoch} (parameter norm {parameter_norm:.3e})")]
    NonFiniteLoss { epoch: usize, parameter_norm: f64 },
    #[error("checkpoint format version {found} is not supported (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },
    #[error("checkpoint is corrupt: {0}")]
    Corrupt(String),
    #[error("labeling failed: {0}")]
    Label(#[from] crate::oracle::OracleError),
    #[error("instance generation failed: {0}")]
    Generate(#[from] crate::instance::InstanceError),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("failed to {action} {}: {source}", path.display())]
    Io {
        action: &'static str,
        path: PathBuf,
        source: std::io::Error,
    },
}
