use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::labels::{dissolve_small, relabel_compact, ClusterAssignment};
use super::DEFAULT_MIN_CLUSTER_SIZE;
use crate::error::{Error, Result};
use crate::metric::{EmbeddingMatrix, Matrix};
use crate::par;

/// K-means++ seeding under an arbitrary distance. Returns `k` distinct
/// sample indices; later seeds are drawn with probability proportional to the
/// squared distance to the nearest seed chosen so far.
pub fn kmeans_pp_seeds<R, F>(features: &EmbeddingMatrix, k: usize, rng: &mut R, dist: F) -> Result<Vec<usize>>
where
    R: Rng + ?Sized,
    F: Fn(&[f64], &[f64]) -> f64 + Sync + Send,
{
    let n = features.n();
    if k > n || k == 0 {
        return Err(Error::TooFewSamples { k, n });
    }
    let mut seeds = Vec::with_capacity(k);
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    seeds.push(first);
    chosen[first] = true;
    let mut nearest: Vec<f64> = par::map_indices(n, |i| {
        let d = dist(features.row(i), features.row(first));
        d * d
    });
    nearest[first] = 0.0;

    while seeds.len() < k {
        let total: f64 = nearest.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in nearest.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                acc += w;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
            pick.expect("positive total weight")
        } else {
            // Every remaining point coincides with a seed.
            (0..n).find(|&i| !chosen[i]).expect("k <= n")
        };
        seeds.push(next);
        chosen[next] = true;
        let updated: Vec<f64> = par::map_indices(n, |i| {
            let d = dist(features.row(i), features.row(next));
            nearest[i].min(d * d)
        });
        nearest = updated;
        for &s in &seeds {
            nearest[s] = 0.0;
        }
    }
    Ok(seeds)
}

fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest row of `centroids`, ties to the lowest index.
fn nearest_centroid(x: &[f64], centroids: &Matrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centroids.iter_rows().enumerate() {
        let d = squared_euclidean(x, c);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

/// Lloyd's algorithm with K-means++ seeding on Euclidean distance.
#[derive(Debug, Clone)]
pub struct KMeans {
    pub k: usize,
    pub max_iters: usize,
    pub seed: u64,
    pub min_cluster_size: usize,
}

#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub assignment: ClusterAssignment,
    /// Final centroids, indexed by the raw (pre-compaction) label.
    pub centroids: Matrix,
    /// Within-cluster sum of squares after every assignment step.
    pub inertia: Vec<f64>,
}

impl KMeans {
    pub fn new(k: usize, max_iters: usize, seed: u64) -> Self {
        KMeans {
            k,
            max_iters,
            seed,
            min_cluster_size: DEFAULT_MIN_CLUSTER_SIZE,
        }
    }

    pub fn fit(&self, features: &EmbeddingMatrix) -> Result<KMeansFit> {
        let n = features.n();
        let d = features.d();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let seeds = kmeans_pp_seeds(features, self.k, &mut rng, |a, b| squared_euclidean(a, b).sqrt())?;
        let mut centroids = Matrix::zeros(self.k, d);
        for (k, &s) in seeds.iter().enumerate() {
            centroids.row_mut(k).copy_from_slice(features.row(s));
        }

        let mut labels = vec![usize::MAX; n];
        let mut inertia = Vec::new();
        for _ in 0..self.max_iters.max(1) {
            let assigned = par::map_indices(n, |i| nearest_centroid(features.row(i), &centroids));
            inertia.push(assigned.iter().map(|a| a.1).sum());
            let new_labels: Vec<usize> = assigned.into_iter().map(|a| a.0).collect();
            let changed = new_labels != labels;
            labels = new_labels;
            if !changed {
                break;
            }
            let mut sums = Matrix::zeros(self.k, d);
            let mut counts = vec![0usize; self.k];
            for (i, &l) in labels.iter().enumerate() {
                counts[l] += 1;
                for (s, v) in sums.row_mut(l).iter_mut().zip(features.row(i)) {
                    *s += v;
                }
            }
            for k in 0..self.k {
                // An empty cluster keeps its previous centroid.
                if counts[k] > 0 {
                    let c = counts[k] as f64;
                    for (dst, s) in centroids.row_mut(k).iter_mut().zip(sums.row(k)) {
                        *dst = s / c;
                    }
                }
            }
        }

        let raw: Vec<i64> = labels.iter().map(|&l| l as i64).collect();
        let kept = dissolve_small(&raw, self.min_cluster_size);
        Ok(KMeansFit {
            assignment: relabel_compact(&kept),
            centroids,
            inertia,
        })
    }
}

/// K-means on the rows of `features`, small clusters dissolved to `-1`.
pub fn kmeans_fit(features: &EmbeddingMatrix, k: usize, max_iters: usize, seed: u64) -> Result<ClusterAssignment> {
    Ok(KMeans::new(k, max_iters, seed).fit(features)?.assignment)
}
