//! Camera information entropy of a cluster and the loss weights derived
//! from it.

use std::collections::BTreeMap;

/// Member count per camera within one cluster.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CameraHistogram {
    counts: BTreeMap<usize, usize>,
    total: usize,
}

impl CameraHistogram {
    pub fn from_cameras<I: IntoIterator<Item = usize>>(cameras: I) -> Self {
        let mut h = CameraHistogram::default();
        for c in cameras {
            h.add(c, 1);
        }
        h
    }

    pub fn from_counts<I: IntoIterator<Item = (usize, usize)>>(counts: I) -> Self {
        let mut h = CameraHistogram::default();
        for (c, n) in counts {
            h.add(c, n);
        }
        h
    }

    pub fn add(&mut self, camera: usize, count: usize) {
        if count > 0 {
            *self.counts.entry(camera).or_default() += count;
            self.total += count;
        }
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn cameras(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.counts.iter().map(|(&c, &n)| (c, n))
    }
}

/// Camera information entropy with natural logarithm. An empty histogram
/// has entropy 0.
pub fn cie(hist: &CameraHistogram) -> f64 {
    cie_with_base(hist, std::f64::consts::E)
}

/// Camera information entropy with an arbitrary logarithm base.
pub fn cie_with_base(hist: &CameraHistogram, base: f64) -> f64 {
    if hist.total == 0 {
        return 0.0;
    }
    let total = hist.total as f64;
    let ln_base = base.ln();
    let h: f64 = hist
        .counts
        .values()
        .map(|&n| {
            let p = n as f64 / total;
            -p * p.ln()
        })
        .sum();
    (h / ln_base).max(0.0)
}

/// Softmax of the batch's cluster entropies, scaled so the weights sum to
/// the number of clusters `P`.
pub fn batch_loss_weights(cies: &[f64]) -> Vec<f64> {
    let max = cies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = cies.iter().map(|&c| (c - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let p = cies.len() as f64;
    exps.into_iter().map(|e| p * e / sum).collect()
}
