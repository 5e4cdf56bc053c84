//! Dense, direct re-implementations used as test oracles.

use std::collections::BTreeMap;

use reid_core::data::{CameraTaggedDataset, Split};
use reid_core::trainer::LinearEmbedder;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn reciprocal(rank: &[Vec<usize>], i: usize, k: usize) -> Vec<usize> {
    let forward = &rank[i][..=k];
    forward.iter().copied().filter(|&c| rank[c][..=k].contains(&i)).collect()
}

/// k-reciprocal Jaccard distance with dense encodings.
pub fn jaccard(rows: &[Vec<f64>], k1: usize, k2: usize) -> Vec<Vec<f64>> {
    let n = rows.len();
    let k1 = k1.min(n - 1);
    let k2 = k2.min(n);
    let d: Vec<Vec<f64>> = rows.iter().map(|a| rows.iter().map(|b| dist(a, b)).collect()).collect();
    let rank: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut o: Vec<usize> = (0..n).collect();
            o.sort_by(|&a, &b| d[i][a].partial_cmp(&d[i][b]).unwrap().then(a.cmp(&b)));
            o
        })
        .collect();
    let half = (k1 as f64 / 2.0).round_ties_even() as usize;
    let mut v = vec![vec![0.0; n]; n];
    for i in 0..n {
        let base = reciprocal(&rank, i, k1);
        let mut expanded = base.clone();
        for &c in &base {
            let cand = reciprocal(&rank, c, half);
            let common = cand.iter().filter(|x| base.contains(x)).count();
            if common as f64 > 2.0 / 3.0 * cand.len() as f64 {
                expanded.extend(cand);
            }
        }
        expanded.sort();
        expanded.dedup();
        let total: f64 = expanded.iter().map(|&j| (-d[i][j]).exp()).sum();
        for &j in &expanded {
            v[i][j] = (-d[i][j]).exp() / total;
        }
    }
    if k2 != 1 {
        v = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| rank[i][..k2].iter().map(|&q| v[q][j]).sum::<f64>() / k2 as f64)
                    .collect()
            })
            .collect();
    }
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        return 0.0;
                    }
                    let mins: f64 = (0..n).map(|l| v[i][l].min(v[j][l])).sum();
                    let maxs: f64 = (0..n).map(|l| v[i][l].max(v[j][l])).sum();
                    if maxs > 0.0 {
                        1.0 - mins / maxs
                    } else {
                        1.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Connected components of the core graph; border points join the
/// component with the lowest first core index among their neighbours.
pub fn dbscan(d: &reid_core::Matrix, eps: f64, min_samples: usize) -> Vec<i64> {
    let n = d.rows();
    let near = |i: usize, j: usize| d.get(i, j) <= eps;
    let core: Vec<bool> = (0..n).map(|i| (0..n).filter(|&j| near(i, j)).count() >= min_samples).collect();
    let mut comp: Vec<usize> = (0..n).collect();
    fn find(c: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while c[r] != r {
            r = c[r];
        }
        c[x] = r;
        r
    }
    for i in 0..n {
        for j in 0..n {
            if core[i] && core[j] && near(i, j) {
                let (a, b) = (find(&mut comp, i), find(&mut comp, j));
                comp[a.max(b)] = a.min(b);
            }
        }
    }
    let mut order: BTreeMap<usize, i64> = BTreeMap::new();
    for i in 0..n {
        if core[i] {
            let root = find(&mut comp, i);
            let next = order.len() as i64;
            order.entry(root).or_insert(next);
        }
    }
    (0..n)
        .map(|i| {
            if core[i] {
                return order[&find(&mut comp, i)];
            }
            (0..n)
                .filter(|&j| core[j] && near(i, j))
                .map(|j| order[&find(&mut comp, j)])
                .min()
                .unwrap_or(-1)
        })
        .collect()
}

/// Equal up to renaming of the non-negative labels.
pub fn same_partition(a: &[i64], b: &[i64]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut ab = BTreeMap::new();
    let mut ba = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        if (x < 0) != (y < 0) {
            return false;
        }
        if x < 0 {
            continue;
        }
        if *ab.entry(x).or_insert(y) != y || *ba.entry(y).or_insert(x) != x {
            return false;
        }
    }
    true
}

/// (mAP, CMC at 1/5/10, valid queries), or `None` without a valid query.
pub fn map_cmc(emb: &LinearEmbedder, ds: &CameraTaggedDataset, filter: bool) -> Option<(f64, Vec<(usize, f64)>, usize)> {
    let feats: Vec<Vec<f64>> = (0..ds.len()).map(|i| emb.forward(ds.features.row(i)).unwrap().0).collect();
    let gallery: Vec<usize> = (0..ds.len()).filter(|&i| ds.split[i] == Split::Gallery).collect();
    let mut aps = Vec::new();
    let mut first_hits = Vec::new();
    for q in (0..ds.len()).filter(|&i| ds.split[i] == Split::Query) {
        let mut g: Vec<usize> = gallery
            .iter()
            .copied()
            .filter(|&i| !(filter && ds.true_id[i] == ds.true_id[q] && ds.camera[i] == ds.camera[q]))
            .collect();
        g.sort_by(|&a, &b| {
            dist(&feats[q], &feats[a])
                .partial_cmp(&dist(&feats[q], &feats[b]))
                .unwrap()
                .then(a.cmp(&b))
        });
        let hits: Vec<bool> = g.iter().map(|&i| ds.true_id[i] == ds.true_id[q]).collect();
        let r = hits.iter().filter(|&&h| h).count();
        if r == 0 {
            continue;
        }
        let mut found = 0;
        let mut ap = 0.0;
        for (pos, &h) in hits.iter().enumerate() {
            if h {
                found += 1;
                ap += found as f64 / (pos + 1) as f64;
            }
        }
        aps.push(ap / r as f64);
        first_hits.push(hits.iter().position(|&h| h).unwrap() + 1);
    }
    if aps.is_empty() {
        return None;
    }
    let q = aps.len();
    let cmc = [1, 5, 10]
        .iter()
        .map(|&r| (r, first_hits.iter().filter(|&&f| f <= r).count() as f64 / q as f64))
        .collect();
    Some((aps.iter().sum::<f64>() / q as f64, cmc, q))
}

/// Pair-counting ARI; every -1 is its own singleton.
pub fn ari(a: &[i64], b: &[i64]) -> f64 {
    let n = a.len();
    let lift = |l: &[i64]| -> Vec<i64> {
        l.iter()
            .enumerate()
            .map(|(i, &x)| if x < 0 { -1 - i as i64 } else { x })
            .collect()
    };
    let (a, b) = (lift(a), lift(b));
    let (mut both, mut in_a, mut in_b) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let sa = a[i] == a[j];
            let sb = b[i] == b[j];
            in_a += sa as u8 as f64;
            in_b += sb as u8 as f64;
            both += (sa && sb) as u8 as f64;
        }
    }
    let pairs = (n * n.saturating_sub(1) / 2) as f64;
    if pairs == 0.0 {
        return 1.0;
    }
    let expected = in_a * in_b / pairs;
    let max = (in_a + in_b) / 2.0;
    if max == expected {
        1.0
    } else {
        (both - expected) / (max - expected)
    }
}
