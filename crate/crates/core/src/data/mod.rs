//! Multi-camera datasets: synthetic generation, the CSV file format and
//! retrieval / clustering evaluation.

mod eval;
mod io;
mod synth;

pub use eval::{adjusted_rand_index, evaluate_features, evaluate_map_cmc, Embed, EvalReport, IdentityEmbed, CMC_RANKS};
pub use io::{load_dataset, read_dataset, save_dataset, write_dataset};
pub use synth::{generate_blobs, generate_road_lines, generate_synthetic, BlobConfig, RoadLineConfig, SynthConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::EmbeddingMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Query,
    Gallery,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Query => "query",
            Split::Gallery => "gallery",
        }
    }

    pub fn parse(s: &str) -> Option<Split> {
        match s {
            "train" => Some(Split::Train),
            "query" => Some(Split::Query),
            "gallery" => Some(Split::Gallery),
            _ => None,
        }
    }
}

/// Raw input vectors with camera ids, optional identities (`-1` when
/// unknown) and a train/query/gallery tag per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraTaggedDataset {
    pub features: EmbeddingMatrix,
    pub camera: Vec<usize>,
    pub true_id: Vec<i64>,
    pub split: Vec<Split>,
}

impl CameraTaggedDataset {
    pub fn new(features: EmbeddingMatrix, camera: Vec<usize>, true_id: Vec<i64>, split: Vec<Split>) -> Result<Self> {
        let n = features.n();
        for len in [camera.len(), true_id.len(), split.len()] {
            if len != n {
                return Err(Error::LengthMismatch { left: n, right: len });
            }
        }
        let ds = CameraTaggedDataset {
            features,
            camera,
            true_id,
            split,
        };
        ds.validate()?;
        Ok(ds)
    }

    fn validate(&self) -> Result<()> {
        let cams = self.num_cameras();
        let mut seen = vec![false; cams];
        for &c in &self.camera {
            seen[c] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidConfig(format!(
                "camera ids must be dense 0..{cams}, camera {missing} is unused"
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.features.n()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.d()
    }

    pub fn num_cameras(&self) -> usize {
        self.camera.iter().max().map_or(0, |&c| c + 1)
    }

    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.split[i] == split).collect()
    }

    /// Sub-dataset of the given rows.
    pub fn subset(&self, indices: &[usize]) -> Result<CameraTaggedDataset> {
        let features = self.features.select(indices)?;
        Ok(CameraTaggedDataset {
            features,
            camera: indices.iter().map(|&i| self.camera[i]).collect(),
            true_id: indices.iter().map(|&i| self.true_id[i]).collect(),
            split: indices.iter().map(|&i| self.split[i]).collect(),
        })
    }
}
