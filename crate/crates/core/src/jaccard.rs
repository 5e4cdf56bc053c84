//! k-reciprocal encoding and the Jaccard distance between encodings, as used
//! by re-ranking for person retrieval.
//!
//! Every sample gets a sparse weight vector over the dataset: its
//! k1-reciprocal neighbours (expanded with the half-k1 reciprocal sets of
//! those neighbours when they overlap enough), weighted by a Gaussian kernel
//! of the original distance and normalised to sum to one. The vectors are
//! then averaged over each sample's k2 nearest neighbours (local query
//! expansion) and compared with a weighted Jaccard distance.

use crate::error::{Error, Result};
use crate::metric::{euclidean_distances, DistanceMatrix, EmbeddingMatrix, Matrix, MetricTag};
use crate::par;

/// Neighbourhood sizes used by the clustering stage.
pub const DEFAULT_K1: usize = 30;
pub const DEFAULT_K2: usize = 6;

/// Jaccard distance between k-reciprocal encodings of the rows of `features`.
///
/// The original metric is the Euclidean distance between the rows as given;
/// callers normalise beforehand when cosine geometry is intended. `k1` is
/// clamped to `N - 1` and `k2` to `N`.
pub fn k_reciprocal_jaccard(features: &EmbeddingMatrix, k1: usize, k2: usize) -> Result<DistanceMatrix> {
    if k1 < 1 || k2 < 1 || k2 > k1 {
        return Err(Error::BadK { k1, k2 });
    }
    let n = features.n();
    if n < 2 {
        return Err(Error::TooFewSamples { k: 2, n });
    }
    let k1 = k1.min(n - 1);
    let k2 = k2.min(n);
    let dist = euclidean_distances(features);
    let rank = initial_rank(&dist);

    let half = ((k1 as f64) / 2.0).round_ties_even() as usize;
    let nn_k1 = par::map_indices(n, |i| k_reciprocal_neighbours(&rank, i, k1));
    let nn_half = par::map_indices(n, |i| k_reciprocal_neighbours(&rank, i, half));

    let encodings: Vec<SparseRow> = par::map_indices(n, |i| {
        let base = &nn_k1[i];
        let mut expanded = base.clone();
        for &candidate in base {
            let cand = &nn_half[candidate];
            let overlap = cand.iter().filter(|c| base.binary_search(c).is_ok()).count();
            if overlap as f64 > 2.0 / 3.0 * cand.len() as f64 {
                expanded.extend_from_slice(cand);
            }
        }
        expanded.sort_unstable();
        expanded.dedup();
        let weights: Vec<f64> = expanded.iter().map(|&j| (-dist.get(i, j)).exp()).collect();
        let total: f64 = weights.iter().sum();
        SparseRow {
            idx: expanded,
            val: weights.into_iter().map(|w| w / total).collect(),
        }
    });

    let encodings = if k2 != 1 {
        par::map_indices(n, |i| query_expand(&encodings, &rank[i][..k2], n))
    } else {
        encodings
    };

    Ok(jaccard_from_encodings(&encodings, n))
}

/// Neighbour order of each row: ascending distance, ties by index.
fn initial_rank(dist: &DistanceMatrix) -> Vec<Vec<usize>> {
    par::map_indices(dist.rows(), |i| {
        let row = dist.row(i);
        let mut order: Vec<usize> = (0..row.len()).collect();
        order.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
        order
    })
}

/// Members of the top-(k+1) list of `i` that also have `i` in their own
/// top-(k+1) list. Returned sorted by index.
fn k_reciprocal_neighbours(rank: &[Vec<usize>], i: usize, k: usize) -> Vec<usize> {
    let mut out: Vec<usize> = rank[i][..=k]
        .iter()
        .copied()
        .filter(|&c| rank[c][..=k].contains(&i))
        .collect();
    out.sort_unstable();
    out
}

#[derive(Debug, Clone)]
struct SparseRow {
    idx: Vec<usize>,
    val: Vec<f64>,
}

fn query_expand(rows: &[SparseRow], neighbours: &[usize], n: usize) -> SparseRow {
    let mut dense = vec![0.0; n];
    for &q in neighbours {
        for (&j, &v) in rows[q].idx.iter().zip(&rows[q].val) {
            dense[j] += v;
        }
    }
    let m = neighbours.len() as f64;
    let mut idx = Vec::new();
    let mut val = Vec::new();
    for (j, v) in dense.into_iter().enumerate() {
        if v != 0.0 {
            idx.push(j);
            val.push(v / m);
        }
    }
    SparseRow { idx, val }
}

fn jaccard_from_encodings(rows: &[SparseRow], n: usize) -> DistanceMatrix {
    // Inverted index: for each coordinate, the rows that are non-zero there.
    let mut inverted: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, r) in rows.iter().enumerate() {
        for (&j, &v) in r.idx.iter().zip(&r.val) {
            inverted[j].push((i, v));
        }
    }
    let sums: Vec<f64> = rows.iter().map(|r| r.val.iter().sum()).collect();

    let mut out = Matrix::zeros(n, n);
    par::fill_rows(out.as_mut_slice(), n, |i, out_row| {
        let mut min_sum = vec![0.0; n];
        for (&l, &v) in rows[i].idx.iter().zip(&rows[i].val) {
            for &(j, w) in &inverted[l] {
                min_sum[j] += v.min(w);
            }
        }
        for (j, slot) in out_row.iter_mut().enumerate() {
            if i == j {
                *slot = 0.0;
                continue;
            }
            let max_sum = sums[i] + sums[j] - min_sum[j];
            *slot = if max_sum > 0.0 {
                (1.0 - min_sum[j] / max_sum).clamp(0.0, 1.0)
            } else {
                1.0
            };
        }
    });
    DistanceMatrix::new(out, MetricTag::Jaccard).expect("jaccard entries lie in [0, 1]")
}
