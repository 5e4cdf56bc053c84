//! Cluster-proxy memory, the weighted infoNCE loss and memory updates.

use serde::{Deserialize, Serialize};

use crate::cluster::compute_centroids;
use crate::error::{Error, Result};
use crate::metric::{dot, l2_norm, EmbeddingMatrix, Matrix, MIN_NORM};

pub const DEFAULT_TEMPERATURE: f64 = 0.05;
pub const DEFAULT_MOMENTUM: f64 = 0.2;
/// Lower clamp on both terms of the confidence-integrated discrepancy.
pub const CHD_FLOOR: f64 = 1e-6;

/// One unit-norm proxy per pseudo-label.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterMemory {
    proxies: Matrix,
    pub momentum: f64,
    pub temperature: f64,
}

impl ClusterMemory {
    pub fn from_proxies(proxies: Matrix, momentum: f64, temperature: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&momentum) || !(temperature > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "momentum must lie in [0, 1] and temperature be > 0, got {momentum}, {temperature}"
            )));
        }
        let mut proxies = proxies;
        for k in 0..proxies.rows() {
            normalize_in_place(proxies.row_mut(k)).map_err(|_| Error::ZeroVector { row: k })?;
        }
        Ok(ClusterMemory {
            proxies,
            momentum,
            temperature,
        })
    }

    pub fn len(&self) -> usize {
        self.proxies.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.proxies.rows() == 0
    }

    pub fn proxy(&self, k: usize) -> &[f64] {
        self.proxies.row(k)
    }

    pub fn proxies(&self) -> &Matrix {
        &self.proxies
    }
}

fn normalize_in_place(v: &mut [f64]) -> Result<()> {
    let n = l2_norm(v);
    if n < MIN_NORM {
        return Err(Error::ZeroVector { row: 0 });
    }
    v.iter_mut().for_each(|x| *x /= n);
    Ok(())
}

/// Memory initialised with the normalised centroid of every cluster.
/// `labels` must be compact (`0..K`, `-1` ignored).
pub fn init_memory(features: &EmbeddingMatrix, labels: &[i64], momentum: f64, temperature: f64) -> Result<ClusterMemory> {
    let k = labels.iter().copied().max().map_or(0, |m| (m + 1).max(0) as usize);
    let centroids = compute_centroids(features, labels, k)?;
    ClusterMemory::from_proxies(centroids, momentum, temperature)
}

/// `-w * log softmax_y(f . M^T / tau)` and its gradient with respect to `f`.
/// Proxies are constants.
pub fn info_nce_loss_and_grad(f: &[f64], memory: &ClusterMemory, y: usize, w: f64) -> Result<(f64, Vec<f64>)> {
    let k = memory.len();
    if y >= k {
        return Err(Error::BadLabel { label: y as i64, k });
    }
    let d = memory.proxies.cols();
    if f.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: f.len(),
        });
    }
    let tau = memory.temperature;
    let logits: Vec<f64> = memory.proxies.iter_rows().map(|m| dot(f, m) / tau).collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    let loss = w * (z.ln() - (logits[y] - max));

    let mut grad = vec![0.0; d];
    for (kk, m) in memory.proxies.iter_rows().enumerate() {
        let p = exps[kk] / z - if kk == y { 1.0 } else { 0.0 };
        for (g, &mv) in grad.iter_mut().zip(m) {
            *g += p * mv;
        }
    }
    let scale = w / tau;
    grad.iter_mut().for_each(|g| *g *= scale);
    Ok((loss.max(0.0), grad))
}

/// PK-sampled mini-batch with embedded, unit-norm features.
#[derive(Debug, Clone)]
pub struct MiniBatch {
    pub indices: Vec<usize>,
    pub features: Matrix,
    pub labels: Vec<usize>,
    pub cameras: Vec<usize>,
    pub weights: Vec<f64>,
}

impl MiniBatch {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn members(&self, label: usize) -> Vec<usize> {
        (0..self.len()).filter(|&b| self.labels[b] == label).collect()
    }

    /// Distinct labels in ascending order.
    pub fn distinct_labels(&self) -> Vec<usize> {
        let mut l = self.labels.clone();
        l.sort_unstable();
        l.dedup();
        l
    }
}

/// Normalised mean of the batch features sharing `label` and `camera`.
pub fn camera_centre(batch: &MiniBatch, label: usize, camera: usize) -> Result<Vec<f64>> {
    let d = batch.features.cols();
    let mut sum = vec![0.0; d];
    let mut count = 0usize;
    for b in 0..batch.len() {
        if batch.labels[b] == label && batch.cameras[b] == camera {
            count += 1;
            for (s, v) in sum.iter_mut().zip(batch.features.row(b)) {
                *s += v;
            }
        }
    }
    if count == 0 {
        return Err(Error::EmptyIntersection { label, camera });
    }
    sum.iter_mut().for_each(|s| *s /= count as f64);
    normalize_in_place(&mut sum)?;
    Ok(sum)
}

/// Harmonic mean of the rescaled cosine distance between `m` and `f` and the
/// rescaled cosine similarity between `f` and its camera centre `o`.
pub fn chd(m: &[f64], f: &[f64], o: &[f64]) -> f64 {
    let d = ((1.0 - dot(m, f)) / 2.0).clamp(CHD_FLOOR, 1.0);
    let s = ((1.0 + dot(f, o)) / 2.0).clamp(CHD_FLOOR, 1.0);
    2.0 * d * s / (d + s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateStrategy {
    /// Every member, in sampled order.
    Vanilla,
    /// Member farthest from the proxy.
    Hard,
    /// Batch-local camera centre farthest from the proxy.
    Tccl,
    /// Member with the largest confidence-integrated discrepancy.
    Chd,
}

impl UpdateStrategy {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "vanilla" => Some(UpdateStrategy::Vanilla),
            "hard" => Some(UpdateStrategy::Hard),
            "tccl" => Some(UpdateStrategy::Tccl),
            "chd" => Some(UpdateStrategy::Chd),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            UpdateStrategy::Vanilla => "vanilla",
            UpdateStrategy::Hard => "hard",
            UpdateStrategy::Tccl => "tccl",
            UpdateStrategy::Chd => "chd",
        }
    }
}

fn argmax_first(scores: impl Iterator<Item = (usize, f64)>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores {
        if best.is_none_or(|b| s > b.1) {
            best = Some((i, s));
        }
    }
    best.map(|b| b.0)
}

/// Vectors used to update the proxy of `label`: every member for
/// [`UpdateStrategy::Vanilla`], a single vector otherwise.
pub fn select_update_sample(
    strategy: UpdateStrategy,
    batch: &MiniBatch,
    label: usize,
    memory: &ClusterMemory,
) -> Result<Vec<Vec<f64>>> {
    let members = batch.members(label);
    if members.is_empty() {
        return Err(Error::NoMembers { label });
    }
    if label >= memory.len() {
        return Err(Error::BadLabel {
            label: label as i64,
            k: memory.len(),
        });
    }
    let m = memory.proxy(label);
    let row = |b: usize| batch.features.row(b).to_vec();
    Ok(match strategy {
        UpdateStrategy::Vanilla => members.iter().map(|&b| row(b)).collect(),
        UpdateStrategy::Hard => {
            let pick = argmax_first(members.iter().map(|&b| (b, 1.0 - dot(m, batch.features.row(b))))).unwrap();
            vec![row(pick)]
        }
        UpdateStrategy::Tccl => {
            let mut cameras = Vec::new();
            for &b in &members {
                if !cameras.contains(&batch.cameras[b]) {
                    cameras.push(batch.cameras[b]);
                }
            }
            let centres = cameras
                .iter()
                .map(|&c| camera_centre(batch, label, c))
                .collect::<Result<Vec<_>>>()?;
            let pick = argmax_first(centres.iter().enumerate().map(|(i, o)| (i, 1.0 - dot(m, o)))).unwrap();
            vec![centres[pick].clone()]
        }
        UpdateStrategy::Chd => {
            let mut scores = Vec::with_capacity(members.len());
            for &b in &members {
                let o = camera_centre(batch, label, batch.cameras[b])?;
                scores.push((b, chd(m, batch.features.row(b), &o)));
            }
            vec![row(argmax_first(scores.into_iter()).unwrap())]
        }
    })
}

/// `m <- alpha * m + (1 - alpha) * f`, renormalised.
pub fn momentum_update(memory: &mut ClusterMemory, label: usize, f: &[f64]) -> Result<()> {
    if label >= memory.len() {
        return Err(Error::BadLabel {
            label: label as i64,
            k: memory.len(),
        });
    }
    let alpha = memory.momentum;
    if alpha == 1.0 {
        return Ok(());
    }
    let row = memory.proxies.row_mut(label);
    if row.len() != f.len() {
        return Err(Error::DimensionMismatch {
            expected: row.len(),
            found: f.len(),
        });
    }
    let blended: Vec<f64> = row.iter().zip(f).map(|(m, x)| alpha * m + (1.0 - alpha) * x).collect();
    let n = l2_norm(&blended);
    if n < MIN_NORM {
        return Err(Error::ZeroVector { row: label });
    }
    for (dst, v) in row.iter_mut().zip(blended) {
        *dst = v / n;
    }
    Ok(())
}

/// Applies `strategy` to every label of the batch, in ascending label order.
pub fn update_memory(memory: &mut ClusterMemory, batch: &MiniBatch, strategy: UpdateStrategy) -> Result<()> {
    for label in batch.distinct_labels() {
        for f in select_update_sample(strategy, batch, label, memory)? {
            momentum_update(memory, label, &f)?;
        }
    }
    Ok(())
}
