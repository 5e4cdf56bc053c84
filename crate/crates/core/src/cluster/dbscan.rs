use std::collections::VecDeque;

use super::labels::{ClusterAssignment, OUTLIER};
use crate::error::{Error, Result};
use crate::metric::DistanceMatrix;
use crate::par;

/// Neighbour threshold used on Jaccard distances.
pub const DEFAULT_EPS: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbscanConfig {
    pub eps: f64,
    /// Neighbourhood size (self included) that makes a point core.
    pub min_samples: usize,
}

impl Default for DbscanConfig {
    fn default() -> Self {
        DbscanConfig {
            eps: DEFAULT_EPS,
            min_samples: super::DEFAULT_MIN_CLUSTER_SIZE,
        }
    }
}

impl DbscanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) || self.min_samples < 1 {
            return Err(Error::InvalidConfig(format!(
                "dbscan needs eps > 0 and min_samples >= 1, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Density clustering over a precomputed square distance matrix.
///
/// Clusters are numbered by their lowest-index core point. A border point
/// joins the lowest-numbered cluster among its core neighbours.
pub fn dbscan_fit(dist: &DistanceMatrix, config: &DbscanConfig) -> Result<ClusterAssignment> {
    config.validate()?;
    if !dist.is_square() {
        return Err(Error::DimensionMismatch {
            expected: dist.rows(),
            found: dist.cols(),
        });
    }
    let n = dist.rows();
    let neighbours: Vec<Vec<usize>> = par::map_indices(n, |i| {
        dist.row(i)
            .iter()
            .enumerate()
            .filter(|(_, &d)| d <= config.eps)
            .map(|(j, _)| j)
            .collect()
    });
    let core: Vec<bool> = neighbours.iter().map(|nb| nb.len() >= config.min_samples).collect();

    let mut labels = vec![OUTLIER; n];
    let mut k = 0usize;
    let mut queue = VecDeque::new();
    for start in 0..n {
        if !core[start] || labels[start] != OUTLIER {
            continue;
        }
        labels[start] = k as i64;
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            for &q in &neighbours[p] {
                if core[q] && labels[q] == OUTLIER {
                    labels[q] = k as i64;
                    queue.push_back(q);
                }
            }
        }
        k += 1;
    }
    for i in 0..n {
        if core[i] {
            continue;
        }
        labels[i] = neighbours[i]
            .iter()
            .filter(|&&j| core[j])
            .map(|&j| labels[j])
            .min()
            .unwrap_or(OUTLIER);
    }
    Ok(ClusterAssignment::new(labels, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{Matrix, MetricTag};

    fn line(points: &[f64]) -> DistanceMatrix {
        let n = points.len();
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, (points[i] - points[j]).abs());
            }
        }
        DistanceMatrix::new(m, MetricTag::Custom).unwrap()
    }

    #[test]
    fn sparse_points_are_all_noise() {
        let d = line(&[0.0, 1.0, 2.0, 3.0]);
        let a = dbscan_fit(&d, &DbscanConfig { eps: 0.5, min_samples: 2 }).unwrap();
        assert_eq!(a.labels, vec![-1; 4]);
        assert_eq!(a.k, 0);
    }

    #[test]
    fn tight_blob_is_one_cluster() {
        let pts: Vec<f64> = (0..10).map(|i| i as f64 * 0.01).collect();
        let a = dbscan_fit(&line(&pts), &DbscanConfig::default()).unwrap();
        assert_eq!(a.labels, vec![0; 10]);
    }

    #[test]
    fn border_points_attach_to_lowest_cluster() {
        // 1.0 is within eps of a core point of each group but is not core.
        let d = line(&[0.0, 0.1, 0.2, 0.3, 1.0, 1.7, 1.8, 1.9, 2.0]);
        let a = dbscan_fit(&d, &DbscanConfig { eps: 0.75, min_samples: 4 }).unwrap();
        assert_eq!(a.labels, vec![0, 0, 0, 0, 0, 1, 1, 1, 1]);
    }

    #[test]
    fn rejects_bad_config() {
        let d = line(&[0.0, 1.0]);
        assert!(dbscan_fit(&d, &DbscanConfig { eps: 0.0, min_samples: 2 }).is_err());
    }

    proptest::proptest! {
        #[test]
        fn core_partition_survives_permutation(
            points in proptest::collection::vec(0.0f64..10.0, 20),
            perm_seed in 0u64..1000,
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let cfg = DbscanConfig { eps: 0.8, min_samples: 3 };
            let mut perm: Vec<usize> = (0..points.len()).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(perm_seed));
            let shuffled: Vec<f64> = perm.iter().map(|&p| points[p]).collect();
            let a = dbscan_fit(&line(&points), &cfg).unwrap().labels;
            let b = dbscan_fit(&line(&shuffled), &cfg).unwrap().labels;
            let n = points.len();
            let is_core = |i: usize| (0..n).filter(|&j| (points[i] - points[j]).abs() <= cfg.eps).count() >= cfg.min_samples;
            for i in 0..n {
                let bi = perm.iter().position(|&p| p == i).unwrap();
                proptest::prop_assert_eq!(a[i] == OUTLIER, b[bi] == OUTLIER);
                for j in 0..n {
                    if is_core(i) && is_core(j) {
                        let bj = perm.iter().position(|&p| p == j).unwrap();
                        proptest::prop_assert_eq!(a[i] == a[j], b[bi] == b[bj]);
                    }
                }
            }
        }
    }
}
