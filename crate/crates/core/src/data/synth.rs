use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{CameraTaggedDataset, Split};
use crate::error::{Error, Result};
use crate::metric::EmbeddingMatrix;

/// Identities observed through cameras that shift every feature by a
/// camera-specific offset.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub ids: usize,
    pub cameras: usize,
    pub samples_per_id: usize,
    pub d_in: usize,
    pub camera_bias: f64,
    pub noise_sigma: f64,
    /// Fraction of identities held out for query/gallery.
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            ids: 50,
            cameras: 4,
            samples_per_id: 16,
            d_in: 32,
            camera_bias: 2.0,
            noise_sigma: 0.5,
            test_fraction: 0.5,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ids < 2 || self.cameras < 1 || self.samples_per_id < 2 || self.d_in < 1 {
            return Err(Error::InvalidConfig(format!(
                "need ids >= 2, cameras >= 1, samples_per_id >= 2, d_in >= 1; got {self:?}"
            )));
        }
        if !(self.camera_bias >= 0.0) || !(self.noise_sigma >= 0.0) {
            return Err(Error::InvalidConfig("camera_bias and noise_sigma must be >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.test_fraction) {
            return Err(Error::InvalidConfig("test_fraction must lie in [0, 1)".into()));
        }
        Ok(())
    }

    /// Number of identities in the held-out split.
    pub fn test_ids(&self) -> usize {
        if self.test_fraction == 0.0 {
            return 0;
        }
        ((self.ids as f64 * self.test_fraction).round() as usize).clamp(1, self.ids - 1)
    }
}

fn gaussian_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}

/// `x = id_latent + camera_bias * camera_offset + noise_sigma * eps`.
///
/// Identities `0..ids - test_ids` form the training split. Each held-out
/// identity contributes its first sample as a query and the rest to the
/// gallery. With two or more cameras every identity is seen by at least two.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<CameraTaggedDataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let id_latents: Vec<Vec<f64>> = (0..cfg.ids).map(|_| gaussian_vec(&mut rng, cfg.d_in)).collect();
    let cam_offsets: Vec<Vec<f64>> = (0..cfg.cameras).map(|_| gaussian_vec(&mut rng, cfg.d_in)).collect();
    let first_test = cfg.ids - cfg.test_ids();

    let n = cfg.ids * cfg.samples_per_id;
    let mut data = Vec::with_capacity(n * cfg.d_in);
    let mut camera = Vec::with_capacity(n);
    let mut true_id = Vec::with_capacity(n);
    let mut split = Vec::with_capacity(n);
    for (g, latent) in id_latents.iter().enumerate() {
        let mut cams: Vec<usize> = (0..cfg.samples_per_id).map(|_| rng.random_range(0..cfg.cameras)).collect();
        if cfg.cameras >= 2 && cams.iter().all(|&c| c == cams[0]) {
            cams[1] = (cams[0] + 1) % cfg.cameras;
        }
        for (s, &c) in cams.iter().enumerate() {
            for j in 0..cfg.d_in {
                let eps: f64 = StandardNormal.sample(&mut rng);
                data.push(latent[j] + cfg.camera_bias * cam_offsets[c][j] + cfg.noise_sigma * eps);
            }
            camera.push(c);
            true_id.push(g as i64);
            split.push(if g < first_test {
                Split::Train
            } else if s == 0 {
                Split::Query
            } else {
                Split::Gallery
            });
        }
    }
    CameraTaggedDataset::new(EmbeddingMatrix::new(n, cfg.d_in, data)?, camera, true_id, split)
}

/// Isotropic Gaussian blobs with centres on a scaled simplex-like layout.
#[derive(Debug, Clone, PartialEq)]
pub struct BlobConfig {
    pub clusters: usize,
    pub per_cluster: usize,
    pub dim: usize,
    /// Distance between neighbouring centres along each axis.
    pub separation: f64,
    pub spread: f64,
    pub seed: u64,
}

impl Default for BlobConfig {
    fn default() -> Self {
        BlobConfig {
            clusters: 3,
            per_cluster: 30,
            dim: 2,
            separation: 0.25,
            spread: 0.02,
            seed: 0,
        }
    }
}

/// Blob `c` is centred at `separation * e_{c mod dim} * (1 + c / dim)`;
/// every sample is tagged train on camera 0 with its blob as identity.
pub fn generate_blobs(cfg: &BlobConfig) -> Result<CameraTaggedDataset> {
    if cfg.clusters < 1 || cfg.per_cluster < 1 || cfg.dim < 1 {
        return Err(Error::InvalidConfig(format!("bad blob configuration {cfg:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut data = Vec::new();
    let mut ids = Vec::new();
    for c in 0..cfg.clusters {
        let mut centre = vec![0.0; cfg.dim];
        if c > 0 {
            let axis = (c - 1) % cfg.dim;
            centre[axis] = cfg.separation * (1 + (c - 1) / cfg.dim) as f64;
        }
        for _ in 0..cfg.per_cluster {
            for &m in &centre {
                let e: f64 = StandardNormal.sample(&mut rng);
                data.push(m + cfg.spread * e);
            }
            ids.push(c as i64);
        }
    }
    let n = ids.len();
    CameraTaggedDataset::new(EmbeddingMatrix::new(n, cfg.dim, data)?, vec![0; n], ids, vec![Split::Train; n])
}

/// Four vertical road markings in the plane: two continuous strips and two
/// dashed strips broken into short segments.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadLineConfig {
    pub per_line: usize,
    /// Horizontal gap between neighbouring lines.
    pub spacing: f64,
    /// Length of every line.
    pub length: f64,
    pub width: f64,
    pub dashes: usize,
    /// Fraction of every dash period that is painted.
    pub duty: f64,
    pub seed: u64,
}

impl Default for RoadLineConfig {
    fn default() -> Self {
        RoadLineConfig {
            per_line: 50,
            spacing: 0.2,
            length: 0.5,
            width: 0.004,
            dashes: 4,
            duty: 0.5,
            seed: 0,
        }
    }
}

/// Lines 0 and 1 are solid, lines 2 and 3 dashed.
pub fn generate_road_lines(cfg: &RoadLineConfig) -> Result<CameraTaggedDataset> {
    if cfg.per_line < 2 || cfg.dashes < 1 || !(cfg.duty > 0.0 && cfg.duty <= 1.0) {
        return Err(Error::InvalidConfig(format!("bad road line configuration {cfg:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut data = Vec::new();
    let mut ids = Vec::new();
    let period = cfg.length / cfg.dashes as f64;
    for line in 0..4usize {
        let x0 = line as f64 * cfg.spacing;
        for _ in 0..cfg.per_line {
            let y = if line < 2 {
                rng.random::<f64>() * cfg.length
            } else {
                let dash = rng.random_range(0..cfg.dashes) as f64;
                (dash + rng.random::<f64>() * cfg.duty) * period
            };
            let e: f64 = StandardNormal.sample(&mut rng);
            data.push(x0 + cfg.width * e);
            data.push(y);
            ids.push(line as i64);
        }
    }
    let n = ids.len();
    CameraTaggedDataset::new(EmbeddingMatrix::new(n, 2, data)?, vec![0; n], ids, vec![Split::Train; n])
}
