//! Retrieval metrics (mAP, CMC) and the adjusted Rand index.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{CameraTaggedDataset, Split};
use crate::error::{Error, Result};
use crate::metric::euclidean;
use crate::par;

/// Ranks reported on the CMC curve.
pub const CMC_RANKS: [usize; 3] = [1, 5, 10];

/// Maps a raw input vector to an embedding.
pub trait Embed {
    fn embed(&self, x: &[f64]) -> Result<Vec<f64>>;
}

/// Uses raw inputs as embeddings.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityEmbed;

impl Embed for IdentityEmbed {
    fn embed(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(x.to_vec())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub map: f64,
    /// `(rank, rate)` for every entry of [`CMC_RANKS`].
    pub cmc: Vec<(usize, f64)>,
    pub num_queries: usize,
}

impl EvalReport {
    pub fn rank(&self, r: usize) -> Option<f64> {
        self.cmc.iter().find(|(k, _)| *k == r).map(|(_, v)| *v)
    }
}

/// Query/gallery retrieval with an embedder over the dataset's query and
/// gallery splits.
pub fn evaluate_map_cmc<E: Embed + Sync>(
    embedder: &E,
    ds: &CameraTaggedDataset,
    cross_camera_filter: bool,
) -> Result<EvalReport> {
    let q = ds.indices(Split::Query);
    let g = ds.indices(Split::Gallery);
    let embed = |idx: &[usize]| -> Result<Vec<Vec<f64>>> {
        par::map_indices(idx.len(), |k| embedder.embed(ds.features.row(idx[k])))
            .into_iter()
            .collect()
    };
    let qf = embed(&q)?;
    let gf = embed(&g)?;
    let pick = |idx: &[usize], v: &[i64]| idx.iter().map(|&i| v[i]).collect::<Vec<_>>();
    let cams: Vec<i64> = ds.camera.iter().map(|&c| c as i64).collect();
    evaluate_features(
        &qf,
        &pick(&q, &ds.true_id),
        &pick(&q, &cams),
        &gf,
        &pick(&g, &ds.true_id),
        &pick(&g, &cams),
        cross_camera_filter,
    )
}

/// Per-query AP and first-hit rank; `None` when the query has no valid match.
fn score_query(
    qf: &[f64],
    qid: i64,
    qcam: i64,
    gallery: &[Vec<f64>],
    gids: &[i64],
    gcams: &[i64],
    filter: bool,
) -> Option<(f64, usize)> {
    let mut order: Vec<(f64, usize)> = gallery
        .iter()
        .enumerate()
        .filter(|&(j, _)| !(filter && gids[j] == qid && gcams[j] == qcam))
        .map(|(j, g)| (euclidean(qf, g), j))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut hits = 0usize;
    let mut precision_sum = 0.0;
    let mut first = None;
    for (pos, &(_, j)) in order.iter().enumerate() {
        if gids[j] == qid {
            hits += 1;
            precision_sum += hits as f64 / (pos + 1) as f64;
            first.get_or_insert(pos + 1);
        }
    }
    first.map(|f| (precision_sum / hits as f64, f))
}

/// mAP and CMC from precomputed embeddings. Queries without any valid
/// gallery match are skipped; gallery ties break by gallery index.
pub fn evaluate_features(
    query: &[Vec<f64>],
    query_ids: &[i64],
    query_cams: &[i64],
    gallery: &[Vec<f64>],
    gallery_ids: &[i64],
    gallery_cams: &[i64],
    cross_camera_filter: bool,
) -> Result<EvalReport> {
    let scored = par::map_indices(query.len(), |i| {
        score_query(
            &query[i],
            query_ids[i],
            query_cams[i],
            gallery,
            gallery_ids,
            gallery_cams,
            cross_camera_filter,
        )
    });
    let valid: Vec<(f64, usize)> = scored.into_iter().flatten().collect();
    if valid.is_empty() {
        return Err(Error::NoValidQuery);
    }
    let m = valid.len() as f64;
    let map = valid.iter().map(|v| v.0).sum::<f64>() / m;
    let cmc = CMC_RANKS
        .iter()
        .map(|&r| (r, valid.iter().filter(|v| v.1 <= r).count() as f64 / m))
        .collect();
    Ok(EvalReport {
        map,
        cmc,
        num_queries: valid.len(),
    })
}

fn pairs(n: f64) -> f64 {
    n * (n - 1.0) / 2.0
}

/// Adjusted Rand index; every `-1` counts as its own singleton cluster.
pub fn adjusted_rand_index(a: &[i64], b: &[i64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let n = a.len();
    let key = |l: i64, i: usize| if l < 0 { (true, i as i64) } else { (false, l) };
    let mut table: HashMap<((bool, i64), (bool, i64)), usize> = HashMap::new();
    let mut rows: HashMap<(bool, i64), usize> = HashMap::new();
    let mut cols: HashMap<(bool, i64), usize> = HashMap::new();
    for i in 0..n {
        let (ka, kb) = (key(a[i], i), key(b[i], i));
        *table.entry((ka, kb)).or_default() += 1;
        *rows.entry(ka).or_default() += 1;
        *cols.entry(kb).or_default() += 1;
    }
    let index: f64 = table.values().map(|&v| pairs(v as f64)).sum();
    let sum_a: f64 = rows.values().map(|&v| pairs(v as f64)).sum();
    let sum_b: f64 = cols.values().map(|&v| pairs(v as f64)).sum();
    let total = pairs(n as f64);
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = sum_a * sum_b / total;
    let max = 0.5 * (sum_a + sum_b);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}
