use std::collections::HashMap;

/// Label of samples that belong to no cluster.
pub const OUTLIER: i64 = -1;

/// Pseudo-labels for N samples: `-1` or `0..k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    pub labels: Vec<i64>,
    pub k: usize,
}

impl ClusterAssignment {
    pub fn new(labels: Vec<i64>, k: usize) -> Self {
        debug_assert!(labels.iter().all(|&l| l == OUTLIER || (l >= 0 && (l as usize) < k)));
        ClusterAssignment { labels, k }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn outlier_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == OUTLIER).count()
    }

    /// Member count of every cluster `0..k`.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            if l >= 0 {
                sizes[l as usize] += 1;
            }
        }
        sizes
    }

    /// Indices with label `k`, ascending.
    pub fn members(&self, k: usize) -> Vec<usize> {
        members_of(&self.labels, k)
    }

    /// Number of clusters with at least one member.
    pub fn cluster_count(&self) -> usize {
        self.sizes().iter().filter(|&&s| s > 0).count()
    }
}

pub(crate) fn members_of(labels: &[i64], k: usize) -> Vec<usize> {
    labels
        .iter()
        .enumerate()
        .filter(|(_, &l)| l == k as i64)
        .map(|(i, _)| i)
        .collect()
}

/// Renames surviving labels to `0..K'` in order of first appearance.
pub fn relabel_compact(labels: &[i64]) -> ClusterAssignment {
    let mut map: HashMap<i64, i64> = HashMap::new();
    let out = labels
        .iter()
        .map(|&l| {
            if l < 0 {
                OUTLIER
            } else {
                let next = map.len() as i64;
                *map.entry(l).or_insert(next)
            }
        })
        .collect();
    ClusterAssignment::new(out, map.len())
}

/// Sends members of clusters smaller than `min_size` to `-1`. Other labels
/// are left untouched.
pub fn dissolve_small(labels: &[i64], min_size: usize) -> Vec<i64> {
    let mut counts: HashMap<i64, usize> = HashMap::new();
    for &l in labels.iter().filter(|&&l| l >= 0) {
        *counts.entry(l).or_default() += 1;
    }
    labels
        .iter()
        .map(|&l| if l >= 0 && counts[&l] < min_size { OUTLIER } else { l })
        .collect()
}
