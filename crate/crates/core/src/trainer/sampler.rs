use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};

/// Draws `p` clusters uniformly without replacement and `k_inst` members of
/// each. Members are drawn without replacement unless the cluster is
/// smaller than `k_inst`. Returns sample indices grouped by cluster.
pub fn pk_sample<R: Rng + ?Sized>(labels: &[i64], p: usize, k_inst: usize, rng: &mut R) -> Result<Vec<usize>> {
    let k = labels.iter().copied().max().map_or(0, |m| (m + 1).max(0) as usize);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        if l >= 0 {
            members[l as usize].push(i);
        }
    }
    let live: Vec<usize> = (0..k).filter(|&c| !members[c].is_empty()).collect();
    if live.len() < p || p == 0 {
        return Err(Error::TooFewClusters {
            epoch: 0,
            found: live.len(),
            needed: p,
        });
    }
    let mut out = Vec::with_capacity(p * k_inst);
    for pick in index::sample(rng, live.len(), p) {
        let m = &members[live[pick]];
        if m.len() >= k_inst {
            out.extend(index::sample(rng, m.len(), k_inst).into_iter().map(|j| m[j]));
        } else {
            out.extend((0..k_inst).map(|_| m[rng.random_range(0..m.len())]));
        }
    }
    Ok(out)
}
