//! Harmonic discrepancy clustering.
//!
//! Samples are compared with two metrics. Sample-to-sample discrepancy is
//! `1 - exp(-J)` with `J` the k-reciprocal Jaccard distance; the confidence
//! of a member is `exp(-E)` with `E` the Euler-representation cosine
//! distance to its cluster centroid. The harmonic discrepancy of sample `i`
//! to cluster `k` is the discrepancy between `i` and the member that jointly
//! maximises discrepancy-to-`i` and confidence (their harmonic mean). Each
//! sample takes the cluster that separates it best from all others, and
//! members whose discrepancy exceeds `mean + std` of their cluster are set
//! aside as peripheral until the next iteration.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::kmeans::kmeans_pp_seeds;
use super::labels::{dissolve_small, members_of, relabel_compact, ClusterAssignment, OUTLIER};
use super::DEFAULT_MIN_CLUSTER_SIZE;
use crate::error::{Error, Result};
use crate::jaccard::{k_reciprocal_jaccard, DEFAULT_K1, DEFAULT_K2};
use crate::metric::{euler_cosine_unchecked, pairwise_sim_disc, EmbeddingMatrix, Matrix, DEFAULT_EULER_ALPHA};
use crate::par;

#[derive(Debug, Clone, PartialEq)]
pub struct HdcConfig {
    pub k: usize,
    pub max_iters: usize,
    pub min_cluster_size: usize,
    pub alpha_euler: f64,
    pub seed: u64,
    pub k1: usize,
    pub k2: usize,
}

impl HdcConfig {
    pub fn new(k: usize) -> Self {
        HdcConfig {
            k,
            max_iters: 20,
            min_cluster_size: DEFAULT_MIN_CLUSTER_SIZE,
            alpha_euler: DEFAULT_EULER_ALPHA,
            seed: 0,
            k1: DEFAULT_K1,
            k2: DEFAULT_K2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 || self.max_iters < 1 || self.min_cluster_size < 1 || !(self.alpha_euler > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "hdc needs k >= 2, max_iters >= 1, min_cluster_size >= 1, alpha > 0; got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Internal state after the last iteration.
#[derive(Debug, Clone)]
pub struct HdcState {
    /// K x D, core members only. Indexed by the raw cluster id.
    pub centroids: Matrix,
    /// N x K harmonic discrepancies.
    pub hd: Matrix,
    pub peripheral_flags: Vec<bool>,
    pub epsilon: Vec<f64>,
    /// Labels before small-cluster removal and compaction.
    pub raw_labels: Vec<i64>,
}

#[derive(Debug, Clone)]
pub struct HdcFit {
    pub assignment: ClusterAssignment,
    pub state: HdcState,
    pub iterations: usize,
}

/// K-means++ seeding under the Euler cosine distance, then nearest-seed
/// assignment.
pub fn init_clusters(features: &EmbeddingMatrix, k: usize, alpha: f64, seed: u64) -> Result<ClusterAssignment> {
    let n = features.n();
    if k > n || k == 0 {
        return Err(Error::TooFewSamples { k, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds = kmeans_pp_seeds(features, k, &mut rng, |a, b| euler_cosine_unchecked(a, b, alpha))?;
    let labels = par::map_indices(n, |i| {
        let x = features.row(i);
        let mut best = (0usize, f64::INFINITY);
        for (c, &s) in seeds.iter().enumerate() {
            let d = if s == i { 0.0 } else { euler_cosine_unchecked(x, features.row(s), alpha) };
            if d < best.1 {
                best = (c, d);
            }
        }
        best.0 as i64
    });
    Ok(ClusterAssignment::new(labels, k))
}

/// Mean of the features labelled `k`, for every `k` in `0..k`.
pub fn compute_centroids(features: &EmbeddingMatrix, labels: &[i64], k: usize) -> Result<Matrix> {
    if labels.len() != features.n() {
        return Err(Error::LengthMismatch {
            left: features.n(),
            right: labels.len(),
        });
    }
    let d = features.d();
    let mut sums = Matrix::zeros(k, d);
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        if l < 0 {
            continue;
        }
        let l = l as usize;
        if l >= k {
            return Err(Error::BadLabel { label: l as i64, k });
        }
        counts[l] += 1;
        for (s, v) in sums.row_mut(l).iter_mut().zip(features.row(i)) {
            *s += v;
        }
    }
    let empty: Vec<usize> = (0..k).filter(|&c| counts[c] == 0).collect();
    if !empty.is_empty() {
        return Err(Error::EmptyCluster(empty));
    }
    for c in 0..k {
        let n = counts[c] as f64;
        sums.row_mut(c).iter_mut().for_each(|v| *v /= n);
    }
    Ok(sums)
}

/// `exp(-E(x, c_k))` for every sample and centroid.
pub fn sim_to_centroids(features: &EmbeddingMatrix, centroids: &Matrix, alpha: f64) -> Matrix {
    let k = centroids.rows();
    let mut out = Matrix::zeros(features.n(), k);
    par::fill_rows(out.as_mut_slice(), k, |i, row| {
        for (c, v) in row.iter_mut().enumerate() {
            *v = (-euler_cosine_unchecked(features.row(i), centroids.row(c), alpha)).exp();
        }
    });
    out
}

/// Largest discrepancy between sample `i` and the members of cluster `k`.
pub fn max_link_discrepancy(i: usize, k: usize, disc: &Matrix, labels: &[i64]) -> Result<f64> {
    let members = members_of(labels, k);
    if members.is_empty() {
        return Err(Error::EmptyCluster(vec![k]));
    }
    Ok(members.iter().map(|&x| disc.get(i, x)).fold(f64::NEG_INFINITY, f64::max))
}

#[inline]
fn harmonic_mean(a: f64, b: f64) -> f64 {
    let s = a + b;
    if s > 0.0 {
        2.0 * a * b / s
    } else {
        0.0
    }
}

/// Representative member and HD of sample `i` to the cluster with `members`.
/// `conf(x)` is the confidence of member `x` in its cluster.
#[inline]
fn hd_cell(i: usize, members: &[usize], disc: &Matrix, conf: impl Fn(usize) -> f64) -> (usize, f64) {
    let mut best = (members[0], f64::NEG_INFINITY);
    for &x in members {
        let h = harmonic_mean(disc.get(i, x), conf(x));
        if h > best.1 {
            best = (x, h);
        }
    }
    (best.0, disc.get(i, best.0))
}

/// Representative object of cluster `k` for sample `i`, and the harmonic
/// discrepancy it defines.
pub fn harmonic_discrepancy(
    i: usize,
    k: usize,
    disc: &Matrix,
    sim_to_centroid: &Matrix,
    labels: &[i64],
) -> Result<(usize, f64)> {
    let members = members_of(labels, k);
    if members.is_empty() {
        return Err(Error::EmptyCluster(vec![k]));
    }
    Ok(hd_cell(i, &members, disc, |x| sim_to_centroid.get(x, k)))
}

/// Label each sample with the cluster maximising the mean HD to all other
/// clusters. Since that mean is `(T - hd_k) / (K - 1)` with `T` the row sum,
/// the winner is the cluster of smallest HD.
pub fn assign_labels(hd: &Matrix) -> ClusterAssignment {
    let k = hd.cols();
    let labels = (0..hd.rows())
        .map(|i| {
            if k < 2 {
                return 0;
            }
            let row = hd.row(i);
            let total: f64 = row.iter().sum();
            let denom = (k - 1) as f64;
            let mut best = (0usize, f64::NEG_INFINITY);
            for (c, &v) in row.iter().enumerate() {
                let mu = (total - v) / denom;
                if mu > best.1 {
                    best = (c, mu);
                }
            }
            best.0 as i64
        })
        .collect();
    ClusterAssignment::new(labels, k)
}

/// Flags members whose HD to their own cluster exceeds `mean + std` of that
/// cluster (population std). Returns the updated labels and the thresholds;
/// empty clusters get an infinite threshold.
pub fn detect_peripherals(hd: &Matrix, labels: &[i64]) -> (Vec<i64>, Vec<f64>) {
    let k = hd.cols();
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        if l >= 0 {
            values[l as usize].push(hd.get(i, l as usize));
        }
    }
    let epsilon: Vec<f64> = values
        .iter()
        .map(|v| {
            if v.is_empty() {
                return f64::INFINITY;
            }
            if v.iter().all(|&x| x == v[0]) {
                return v[0];
            }
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
            mean + var.sqrt()
        })
        .collect();
    let out = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            if l >= 0 && hd.get(i, l as usize) > epsilon[l as usize] {
                OUTLIER
            } else {
                l
            }
        })
        .collect();
    (out, epsilon)
}

/// Fills empty clusters so that all `k` have a member, then returns the
/// centroids. An empty cluster takes the sample farthest from its current
/// centroid among samples whose cluster can spare one (or the outlier
/// farthest from every centroid).
fn centroids_with_repair(features: &EmbeddingMatrix, labels: &mut [i64], k: usize, alpha: f64) -> Result<Matrix> {
    loop {
        match compute_centroids(features, labels, k) {
            Ok(c) => return Ok(c),
            Err(Error::EmptyCluster(empty)) => {
                let target = empty[0];
                let mut sizes = vec![0usize; k];
                for &l in labels.iter().filter(|&&l| l >= 0) {
                    sizes[l as usize] += 1;
                }
                let live: Vec<usize> = (0..k).filter(|&c| sizes[c] > 0).collect();
                let partial = partial_centroids(features, labels, k);
                let mut best: Option<(usize, f64)> = None;
                for i in 0..features.n() {
                    let l = labels[i];
                    let d = if l >= 0 {
                        if sizes[l as usize] < 2 {
                            continue;
                        }
                        euler_cosine_unchecked(features.row(i), partial.row(l as usize), alpha)
                    } else {
                        live.iter()
                            .map(|&c| euler_cosine_unchecked(features.row(i), partial.row(c), alpha))
                            .fold(f64::INFINITY, f64::min)
                    };
                    if best.is_none_or(|b| d > b.1) {
                        best = Some((i, d));
                    }
                }
                let (i, _) = best.ok_or(Error::TooFewSamples { k, n: features.n() })?;
                labels[i] = target as i64;
            }
            Err(e) => return Err(e),
        }
    }
}

fn partial_centroids(features: &EmbeddingMatrix, labels: &[i64], k: usize) -> Matrix {
    let mut sums = Matrix::zeros(k, features.d());
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        if l >= 0 {
            counts[l as usize] += 1;
            for (s, v) in sums.row_mut(l as usize).iter_mut().zip(features.row(i)) {
                *s += v;
            }
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            let n = counts[c] as f64;
            sums.row_mut(c).iter_mut().for_each(|v| *v /= n);
        }
    }
    sums
}

/// HD matrix for all samples against the current clusters.
fn hd_matrix(features: &EmbeddingMatrix, labels: &[i64], centroids: &Matrix, disc: &Matrix, alpha: f64) -> Matrix {
    let n = features.n();
    let k = centroids.rows();
    let members: Vec<Vec<usize>> = (0..k).map(|c| members_of(labels, c)).collect();
    let conf: Vec<f64> = par::map_indices(n, |x| {
        let l = labels[x];
        if l >= 0 {
            (-euler_cosine_unchecked(features.row(x), centroids.row(l as usize), alpha)).exp()
        } else {
            0.0
        }
    });
    let mut hd = Matrix::zeros(n, k);
    par::fill_rows(hd.as_mut_slice(), k, |i, row| {
        for (c, slot) in row.iter_mut().enumerate() {
            *slot = hd_cell(i, &members[c], disc, |x| conf[x]).1;
        }
    });
    hd
}

/// Runs harmonic discrepancy clustering on `features` (used as given).
pub fn hdc_fit(features: &EmbeddingMatrix, config: &HdcConfig) -> Result<HdcFit> {
    config.validate()?;
    let n = features.n();
    if n < config.k {
        return Err(Error::TooFewSamples { k: config.k, n });
    }
    let jaccard = k_reciprocal_jaccard(features, config.k1, config.k2)?;
    let (_, disc) = pairwise_sim_disc(&jaccard);

    let mut labels = init_clusters(features, config.k, config.alpha_euler, config.seed)?.labels;
    let mut iterations = 0;
    let mut last = None;
    for _ in 0..config.max_iters {
        iterations += 1;
        let before = labels.clone();
        let centroids = centroids_with_repair(features, &mut labels, config.k, config.alpha_euler)?;
        let hd = hd_matrix(features, &labels, &centroids, &disc, config.alpha_euler);
        let assigned = assign_labels(&hd);
        let (next, epsilon) = detect_peripherals(&hd, &assigned.labels);
        labels = next;
        last = Some((centroids, hd, epsilon));
        if labels == before {
            break;
        }
    }
    let (centroids, hd, epsilon) = last.expect("at least one iteration");
    let peripheral_flags = labels.iter().map(|&l| l == OUTLIER).collect();
    let kept = dissolve_small(&labels, config.min_cluster_size);
    Ok(HdcFit {
        assignment: relabel_compact(&kept),
        state: HdcState {
            centroids,
            hd,
            peripheral_flags,
            epsilon,
            raw_labels: labels,
        },
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{adjusted_rand_index, generate_blobs, BlobConfig};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn emb(rows: &[&[f64]]) -> EmbeddingMatrix {
        EmbeddingMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn centroid_examples() {
        let f = emb(&[&[0.0, 0.0], &[2.0, 2.0], &[5.0, -1.0]]);
        let c = compute_centroids(&f, &[0, 0, 1], 2).unwrap();
        assert_eq!(c.row(0), &[1.0, 1.0]);
        assert_eq!(c.row(1), &[5.0, -1.0]);
        let c = compute_centroids(&f, &[0, -1, 0], 1).unwrap();
        assert_eq!(c.row(0), &[2.5, -0.5]);
    }

    #[test]
    fn centroid_reports_empty_clusters() {
        let f = emb(&[&[0.0], &[1.0]]);
        match compute_centroids(&f, &[0, 2], 4) {
            Err(Error::EmptyCluster(ks)) => assert_eq!(ks, vec![1, 3]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn centroids_match_column_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let rows: Vec<Vec<f64>> = (0..9).map(|_| (0..4).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
            let labels: Vec<i64> = (0..9).map(|i| if i < 5 { 0 } else if i == 5 { -1 } else { 1 }).collect();
            let f = EmbeddingMatrix::from_rows(&rows).unwrap();
            let c = compute_centroids(&f, &labels, 2).unwrap();
            for k in 0..2i64 {
                let idx: Vec<usize> = (0..9).filter(|&i| labels[i] == k).collect();
                for j in 0..4 {
                    let mut s = 0.0;
                    for &i in &idx {
                        s += rows[i][j];
                    }
                    assert_abs_diff_eq!(c.get(k as usize, j), s / idx.len() as f64, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn max_link_examples() {
        let mut disc = Matrix::zeros(3, 3);
        disc.set(0, 1, 0.2);
        disc.set(0, 2, 0.7);
        assert_eq!(max_link_discrepancy(0, 1, &disc, &[0, 1, 1]).unwrap(), 0.7);
        assert_eq!(max_link_discrepancy(0, 0, &disc, &[0, 1, 1]).unwrap(), 0.0);
        assert!(matches!(max_link_discrepancy(0, 2, &disc, &[0, 1, 1]), Err(Error::EmptyCluster(_))));
    }

    #[test]
    fn max_link_matches_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 10;
        let disc = Matrix::from_vec(n, n, (0..n * n).map(|_| rng.random::<f64>()).collect()).unwrap();
        let labels: Vec<i64> = (0..n as i64).map(|i| if i < 6 { 0 } else { 1 }).collect();
        for i in 0..n {
            let mut m = f64::NEG_INFINITY;
            for x in 0..6 {
                if disc.get(i, x) > m {
                    m = disc.get(i, x);
                }
            }
            assert_eq!(max_link_discrepancy(i, 0, &disc, &labels).unwrap(), m);
        }
    }

    #[test]
    fn singleton_representative() {
        let mut disc = Matrix::zeros(2, 2);
        disc.set(0, 1, 0.4);
        disc.set(1, 0, 0.4);
        let sim = Matrix::from_vec(2, 2, vec![1.0, 0.3, 0.3, 1.0]).unwrap();
        assert_eq!(harmonic_discrepancy(0, 1, &disc, &sim, &[0, 1]).unwrap(), (1, 0.4));
    }

    #[test]
    fn own_sample_is_never_representative() {
        let mut disc = Matrix::zeros(3, 3);
        disc.set(0, 1, 0.01);
        disc.set(0, 2, 0.02);
        let sim = Matrix::from_vec(3, 1, vec![1.0, 0.1, 0.1]).unwrap();
        let (rep, hd) = harmonic_discrepancy(0, 0, &disc, &sim, &[0, 0, 0]).unwrap();
        assert_eq!(rep, 2);
        assert_eq!(hd, 0.02);
    }

    #[test]
    fn representative_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let n = 5;
            let mut disc = Matrix::zeros(n, n);
            for a in 0..n {
                for b in a + 1..n {
                    let v = rng.random_range(0.0..0.99);
                    disc.set(a, b, v);
                    disc.set(b, a, v);
                }
            }
            let sim = Matrix::from_vec(n, 1, (0..n).map(|_| rng.random_range(0.01..1.0)).collect()).unwrap();
            let labels = [0, 0, 0, 0, -1];
            let i = 4;
            let mut best = (usize::MAX, -1.0);
            for x in 0..4 {
                let (d, s) = (disc.get(i, x), sim.get(x, 0));
                let h = 2.0 * d * s / (d + s);
                if h > best.1 {
                    best = (x, h);
                }
            }
            let (rep, hd) = harmonic_discrepancy(i, 0, &disc, &sim, &labels).unwrap();
            assert_eq!(rep, best.0);
            assert_eq!(hd, disc.get(i, best.0));
        }
    }

    #[test]
    fn assign_examples() {
        let hd = Matrix::from_vec(2, 2, vec![0.1, 0.9, 0.5, 0.5]).unwrap();
        assert_eq!(assign_labels(&hd).labels, vec![0, 0]);
        let hd = Matrix::from_vec(1, 3, vec![0.7, 0.7, 0.2]).unwrap();
        assert_eq!(assign_labels(&hd).labels, vec![2]);
    }

    fn argmin(row: &[f64]) -> i64 {
        let mut best = 0;
        for (c, &v) in row.iter().enumerate() {
            if v < row[best] {
                best = c;
            }
        }
        best as i64
    }

    proptest! {
        #[test]
        fn assign_is_argmin(k in 2usize..8, data in prop::collection::vec(0.0f64..1.0, 8 * 5)) {
            let n = 5;
            let hd = Matrix::from_vec(n, k, data[..n * k].to_vec()).unwrap();
            let labels = assign_labels(&hd).labels;
            for i in 0..n {
                prop_assert_eq!(labels[i], argmin(hd.row(i)));
            }
        }
    }

    #[test]
    fn peripheral_examples() {
        let hd = Matrix::from_vec(4, 1, vec![0.1, 0.1, 0.1, 0.9]).unwrap();
        let (labels, eps) = detect_peripherals(&hd, &[0, 0, 0, 0]);
        assert_abs_diff_eq!(eps[0], 0.3 + 0.12f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(eps[0], 0.64641, epsilon = 1e-5);
        assert_eq!(labels, vec![0, 0, 0, -1]);

        let hd = Matrix::from_vec(3, 1, vec![0.3; 3]).unwrap();
        let (labels, eps) = detect_peripherals(&hd, &[0, 0, 0]);
        assert_eq!(eps[0], 0.3);
        assert_eq!(labels, vec![0, 0, 0]);

        let hd = Matrix::from_vec(1, 2, vec![0.8, 0.1]).unwrap();
        let (labels, eps) = detect_peripherals(&hd, &[0]);
        assert_eq!(labels, vec![0]);
        assert_eq!(eps[1], f64::INFINITY);
    }

    #[test]
    fn injected_outliers_are_flagged() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut values: Vec<f64> = (0..45).map(|_| 0.2 + 0.01 * rng.random::<f64>()).collect();
        values.extend([0.9, 0.92, 0.95, 0.97, 0.99]);
        let hd = Matrix::from_vec(50, 1, values).unwrap();
        let (labels, _) = detect_peripherals(&hd, &[0; 50]);
        assert!(labels[..45].iter().all(|&l| l == 0));
        assert!(labels[45..].iter().all(|&l| l == -1));
    }

    #[test]
    fn init_cluster_examples() {
        let f = emb(&[&[0.0], &[0.1], &[0.2], &[0.3]]);
        let mut labels = init_clusters(&f, 4, DEFAULT_EULER_ALPHA, 1).unwrap().labels;
        labels.sort();
        assert_eq!(labels, vec![0, 1, 2, 3]);
        assert_eq!(init_clusters(&f, 1, DEFAULT_EULER_ALPHA, 1).unwrap().labels, vec![0; 4]);
        assert!(matches!(init_clusters(&f, 5, DEFAULT_EULER_ALPHA, 1), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn init_clusters_recovers_blobs() {
        for seed in 0..5 {
            let ds = generate_blobs(&BlobConfig { seed, ..Default::default() }).unwrap();
            let a = init_clusters(&ds.features, 3, DEFAULT_EULER_ALPHA, seed).unwrap();
            assert_eq!(adjusted_rand_index(&a.labels, &ds.true_id).unwrap(), 1.0);
        }
    }

    #[test]
    fn singletons_when_k_equals_n() {
        let f = emb(&[&[0.0, 0.0], &[0.3, 0.0], &[0.0, 0.3], &[0.3, 0.3], &[0.15, 0.45]]);
        let mut cfg = HdcConfig::new(5);
        cfg.max_iters = 1;
        cfg.min_cluster_size = 1;
        cfg.k1 = 2;
        cfg.k2 = 1;
        let fit = hdc_fit(&f, &cfg).unwrap();
        assert_eq!(fit.assignment.outlier_count(), 0);
        let mut l = fit.assignment.labels.clone();
        l.sort();
        assert_eq!(l, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn fit_is_deterministic_and_keeps_blob_cores() {
        let ds = generate_blobs(&BlobConfig { seed: 2, ..Default::default() }).unwrap();
        let mut cfg = HdcConfig::new(3);
        cfg.seed = 2;
        let a = hdc_fit(&ds.features, &cfg).unwrap();
        let b = hdc_fit(&ds.features, &cfg).unwrap();
        assert_eq!(a.assignment, b.assignment);
        assert_eq!(a.state.hd.as_slice(), b.state.hd.as_slice());
        assert!(a.state.hd.as_slice().iter().all(|&v| (0.0..1.0).contains(&v)));
        let core: Vec<usize> = (0..ds.len()).filter(|&i| a.assignment.labels[i] >= 0).collect();
        let l: Vec<i64> = core.iter().map(|&i| a.assignment.labels[i]).collect();
        let t: Vec<i64> = core.iter().map(|&i| ds.true_id[i]).collect();
        assert_eq!(adjusted_rand_index(&l, &t).unwrap(), 1.0);
        for (i, &l) in a.state.raw_labels.iter().enumerate() {
            if l < 0 {
                let own = a.state.hd.row(i).iter().cloned().fold(f64::INFINITY, f64::min);
                assert!(own > a.state.epsilon[argmin(a.state.hd.row(i)) as usize]);
            }
        }
    }

    #[test]
    fn rejects_bad_config() {
        let f = emb(&[&[0.0], &[1.0]]);
        assert!(matches!(hdc_fit(&f, &HdcConfig::new(1)), Err(Error::InvalidConfig(_))));
        assert!(matches!(hdc_fit(&f, &HdcConfig::new(3)), Err(Error::TooFewSamples { .. })));
    }
}
