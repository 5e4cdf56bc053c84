//! Unsupervised re-identification toolkit: harmonic discrepancy clustering,
//! camera-entropy weighted contrastive learning over a cluster memory, and
//! confidence-guided hard-sample memory updates.
//!
//! The deep backbone is replaced by a normalised linear embedder so that the
//! whole clustering and training loop runs on synthetic multi-camera data.

pub mod cluster;
pub mod data;
pub mod entropy;
pub mod error;
pub mod jaccard;
pub mod memory;
pub mod metric;
mod par;
pub mod trainer;

pub use error::{Error, Result};
pub use metric::{DistanceMatrix, EmbeddingMatrix, Matrix, MetricTag};
