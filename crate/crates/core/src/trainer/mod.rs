//! The clustering / contrastive training loop over a linear embedder.
//!
//! Every epoch embeds the training split, clusters it from scratch (DBSCAN
//! during warm-up, then the configured algorithm), initialises the proxy
//! memory from cluster centroids and runs PK-sampled iterations of the
//! camera-entropy weighted infoNCE loss followed by memory updates.

mod embedder;
mod sampler;
mod schedule;

pub use embedder::{ForwardCache, LinearEmbedder, MODEL_MAGIC};
pub use sampler::pk_sample;
pub use schedule::LrSchedule;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cluster::{
    dbscan_fit, dissolve_small, hdc_fit, relabel_compact, ClusterAssignment, DbscanConfig, HdcConfig, KMeans,
    DEFAULT_MIN_CLUSTER_SIZE,
};
use crate::data::{evaluate_map_cmc, CameraTaggedDataset, Split};
use crate::entropy::{batch_loss_weights, cie_with_base, CameraHistogram};
use crate::error::{Error, Result};
use crate::jaccard::{k_reciprocal_jaccard, DEFAULT_K1, DEFAULT_K2};
use crate::memory::{
    info_nce_loss_and_grad, init_memory, update_memory, ClusterMemory, MiniBatch, UpdateStrategy, DEFAULT_MOMENTUM,
    DEFAULT_TEMPERATURE,
};
use crate::metric::{EmbeddingMatrix, Matrix, DEFAULT_EULER_ALPHA};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Clustering {
    Hdc,
    Kmeans,
    Dbscan,
}

impl Clustering {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "hdc" => Some(Clustering::Hdc),
            "kmeans" => Some(Clustering::Kmeans),
            "dbscan" => Some(Clustering::Dbscan),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Clustering::Hdc => "hdc",
            Clustering::Kmeans => "kmeans",
            Clustering::Dbscan => "dbscan",
        }
    }
}

/// Settings shared by every clustering algorithm of the loop.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSettings {
    /// Cluster count for the partition-based algorithms.
    pub k: usize,
    pub k1: usize,
    pub k2: usize,
    pub dbscan: DbscanConfig,
    pub alpha_euler: f64,
    pub max_iters: usize,
    pub min_cluster_size: usize,
}

impl Default for ClusterSettings {
    fn default() -> Self {
        ClusterSettings {
            k: 25,
            k1: DEFAULT_K1,
            k2: DEFAULT_K2,
            dbscan: DbscanConfig::default(),
            alpha_euler: DEFAULT_EULER_ALPHA,
            max_iters: 20,
            min_cluster_size: DEFAULT_MIN_CLUSTER_SIZE,
        }
    }
}

/// Clusters `features` as given and removes clusters below the minimum size.
pub fn cluster_features(
    features: &EmbeddingMatrix,
    algorithm: Clustering,
    settings: &ClusterSettings,
    seed: u64,
) -> Result<ClusterAssignment> {
    let raw = match algorithm {
        Clustering::Hdc => {
            let cfg = HdcConfig {
                k: settings.k,
                max_iters: settings.max_iters,
                min_cluster_size: settings.min_cluster_size,
                alpha_euler: settings.alpha_euler,
                seed,
                k1: settings.k1,
                k2: settings.k2,
            };
            hdc_fit(features, &cfg)?.assignment
        }
        Clustering::Kmeans => {
            let mut km = KMeans::new(settings.k, settings.max_iters.max(100), seed);
            km.min_cluster_size = settings.min_cluster_size;
            km.fit(features)?.assignment
        }
        Clustering::Dbscan => {
            let dist = k_reciprocal_jaccard(features, settings.k1, settings.k2)?;
            dbscan_fit(&dist, &settings.dbscan)?
        }
    };
    Ok(relabel_compact(&dissolve_small(&raw.labels, settings.min_cluster_size)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub warmup_epochs: usize,
    pub iters_per_epoch: usize,
    pub p: usize,
    pub k_inst: usize,
    pub base_lr: f64,
    pub weight_decay: f64,
    pub momentum: f64,
    pub temperature: f64,
    pub d_out: usize,
    pub warmup_clustering: Clustering,
    pub clustering: Clustering,
    pub cluster: ClusterSettings,
    pub use_cie: bool,
    /// Logarithm base of the camera entropy.
    pub cie_base: f64,
    pub update: UpdateStrategy,
    pub cross_camera_filter: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            warmup_epochs: 3,
            iters_per_epoch: 20,
            p: 8,
            k_inst: 4,
            base_lr: 3.5e-4,
            weight_decay: 5e-4,
            momentum: DEFAULT_MOMENTUM,
            temperature: DEFAULT_TEMPERATURE,
            d_out: 16,
            warmup_clustering: Clustering::Dbscan,
            clustering: Clustering::Hdc,
            cluster: ClusterSettings::default(),
            use_cie: true,
            cie_base: std::f64::consts::E,
            update: UpdateStrategy::Chd,
            cross_camera_filter: true,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.warmup_epochs > self.epochs {
            return bad("warmup_epochs must not exceed epochs");
        }
        if self.p * self.k_inst < 2 || self.p == 0 {
            return bad("p * k_inst must be at least 2");
        }
        if !(self.base_lr > 0.0) || !(self.weight_decay >= 0.0) {
            return bad("learning rate must be > 0 and weight decay >= 0");
        }
        if !(0.0..=1.0).contains(&self.momentum) || !(self.temperature > 0.0) {
            return bad("momentum must lie in [0, 1] and temperature be > 0");
        }
        if !(self.cie_base > 0.0) || self.cie_base == 1.0 {
            return bad("cie_base must be positive and != 1");
        }
        if self.d_out == 0 {
            return bad("d_out must be >= 1");
        }
        Ok(())
    }

    pub fn schedule(&self) -> LrSchedule {
        LrSchedule {
            base: self.base_lr,
            epochs: self.epochs,
            warmup_epochs: self.warmup_epochs,
        }
    }
}

/// One line of the training report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub clustering: Clustering,
    pub lr: f64,
    pub loss: f64,
    pub clusters: usize,
    pub outliers: usize,
    pub mean_cie: f64,
    pub map: Option<f64>,
    pub rank1: Option<f64>,
    pub rank5: Option<f64>,
    pub rank10: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    pub embedder: LinearEmbedder,
}

/// Embeds every row; outputs are unit norm.
pub fn embed_all(embedder: &LinearEmbedder, x: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
    let rows = par::map_indices(x.n(), |i| embedder.forward(x.row(i)).map(|r| r.0));
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    EmbeddingMatrix::from_rows(&rows)
}

/// Mean weighted infoNCE loss over a batch of raw inputs and its gradient
/// with respect to the embedder weights. Also returns the batch features.
pub fn batch_loss_and_grad(
    embedder: &LinearEmbedder,
    memory: &ClusterMemory,
    inputs: &[&[f64]],
    labels: &[usize],
    weights: &[f64],
) -> Result<(f64, Matrix, Matrix)> {
    let b = inputs.len();
    let per_sample = par::map_indices(b, |i| -> Result<_> {
        let (f, cache) = embedder.forward(inputs[i])?;
        let (loss, grad_f) = info_nce_loss_and_grad(&f, memory, labels[i], weights[i])?;
        Ok((f, cache, loss, grad_f))
    });
    let mut grad_w = Matrix::zeros(embedder.d_out(), embedder.d_in());
    let mut features = Matrix::zeros(b, embedder.d_out());
    let mut total = 0.0;
    let scale = 1.0 / b as f64;
    for (i, r) in per_sample.into_iter().enumerate() {
        let (f, cache, loss, grad_f) = r?;
        total += loss;
        let grad_f: Vec<f64> = grad_f.iter().map(|g| g * scale).collect();
        LinearEmbedder::accumulate_grad(inputs[i], &f, &cache, &grad_f, &mut grad_w);
        features.row_mut(i).copy_from_slice(&f);
    }
    Ok((total * scale, grad_w, features))
}

/// Camera entropy of every cluster `0..k` of `assignment`.
pub fn cluster_entropies(assignment: &ClusterAssignment, cameras: &[usize], base: f64) -> Vec<f64> {
    let mut hists = vec![CameraHistogram::default(); assignment.k];
    for (i, &l) in assignment.labels.iter().enumerate() {
        if l >= 0 {
            hists[l as usize].add(cameras[i], 1);
        }
    }
    hists.iter().map(|h| cie_with_base(h, base)).collect()
}

/// Runs the full loop. See [`train_3c_with`] to observe epochs as they end.
pub fn train_3c(dataset: &CameraTaggedDataset, config: &TrainConfig) -> Result<TrainReport> {
    train_3c_with(dataset, config, |_| {})
}

pub fn train_3c_with(
    dataset: &CameraTaggedDataset,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainReport> {
    config.validate()?;
    let mut embedder = LinearEmbedder::orthogonal(config.d_out, dataset.dim(), config.seed)?;
    let mut records = Vec::with_capacity(config.epochs);
    if config.epochs == 0 {
        return Ok(TrainReport {
            epochs: records,
            embedder,
        });
    }
    let train_idx = dataset.indices(Split::Train);
    if train_idx.is_empty() {
        return Err(Error::InvalidConfig("dataset has no training samples".into()));
    }
    let train = dataset.subset(&train_idx)?;
    let has_eval = !dataset.indices(Split::Query).is_empty() && !dataset.indices(Split::Gallery).is_empty();
    let schedule = config.schedule();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);

    for epoch in 1..=config.epochs {
        let algorithm = if epoch <= config.warmup_epochs {
            config.warmup_clustering
        } else {
            config.clustering
        };
        let features = embed_all(&embedder, &train.features)?;
        let assignment = cluster_features(&features, algorithm, &config.cluster, config.seed.wrapping_add(epoch as u64))?;
        if assignment.k < config.p {
            return Err(Error::TooFewClusters {
                epoch,
                found: assignment.k,
                needed: config.p,
            });
        }
        let cies = cluster_entropies(&assignment, &train.camera, config.cie_base);
        let mean_cie = cies.iter().sum::<f64>() / cies.len() as f64;
        let mut memory = init_memory(&features, &assignment.labels, config.momentum, config.temperature)?;
        let lr = schedule.lr_at(epoch);

        let mut loss_sum = 0.0;
        for _ in 0..config.iters_per_epoch {
            let picked = pk_sample(&assignment.labels, config.p, config.k_inst, &mut rng).map_err(|e| match e {
                Error::TooFewClusters { found, needed, .. } => Error::TooFewClusters { epoch, found, needed },
                e => e,
            })?;
            let labels: Vec<usize> = picked.iter().map(|&i| assignment.labels[i] as usize).collect();
            let weights = if config.use_cie {
                let mut clusters = labels.clone();
                clusters.sort_unstable();
                clusters.dedup();
                let w = batch_loss_weights(&clusters.iter().map(|&c| cies[c]).collect::<Vec<_>>());
                labels
                    .iter()
                    .map(|l| w[clusters.binary_search(l).expect("label sampled")])
                    .collect()
            } else {
                vec![1.0; labels.len()]
            };
            let inputs: Vec<&[f64]> = picked.iter().map(|&i| train.features.row(i)).collect();
            let (loss, grad, batch_features) = batch_loss_and_grad(&embedder, &memory, &inputs, &labels, &weights)?;
            loss_sum += loss;
            embedder.adam_step(&grad, lr, config.weight_decay)?;
            let batch = MiniBatch {
                cameras: picked.iter().map(|&i| train.camera[i]).collect(),
                indices: picked,
                features: batch_features,
                labels,
                weights,
            };
            update_memory(&mut memory, &batch, config.update)?;
        }

        let eval = if has_eval {
            Some(evaluate_map_cmc(&embedder, dataset, config.cross_camera_filter)?)
        } else {
            None
        };
        let record = EpochRecord {
            epoch,
            clustering: algorithm,
            lr,
            loss: if config.iters_per_epoch > 0 {
                loss_sum / config.iters_per_epoch as f64
            } else {
                0.0
            },
            clusters: assignment.k,
            outliers: assignment.outlier_count(),
            mean_cie,
            map: eval.as_ref().map(|e| e.map),
            rank1: eval.as_ref().and_then(|e| e.rank(1)),
            rank5: eval.as_ref().and_then(|e| e.rank(5)),
            rank10: eval.as_ref().and_then(|e| e.rank(10)),
        };
        on_epoch(&record);
        records.push(record);
    }
    Ok(TrainReport {
        epochs: records,
        embedder,
    })
}
