//! Distance and similarity primitives shared by the clustering and training
//! code.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

/// Norm below which a vector is treated as zero.
pub const MIN_NORM: f64 = 1e-12;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// N feature vectors of dimension D. Entries are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix(Matrix);

impl EmbeddingMatrix {
    pub fn new(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        Self::from_matrix(Matrix::from_vec(n, d, data)?)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_matrix(Matrix::from_rows(rows)?)
    }

    pub fn from_matrix(m: Matrix) -> Result<Self> {
        if m.rows == 0 || m.cols == 0 {
            return Err(Error::InvalidConfig(format!(
                "embedding matrix must be non-empty, got {}x{}",
                m.rows, m.cols
            )));
        }
        if m.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("embedding matrix"));
        }
        Ok(EmbeddingMatrix(m))
    }

    pub fn n(&self) -> usize {
        self.0.rows
    }

    pub fn d(&self) -> usize {
        self.0.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        self.0.row(i)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    /// Picks a subset of rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.d());
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self::new(indices.len(), self.d(), data)
    }

    /// Divides every row by its Euclidean norm.
    pub fn l2_normalize_rows(&self) -> Result<Self> {
        let mut out = self.0.clone();
        for i in 0..out.rows {
            let row = out.row_mut(i);
            let norm = l2_norm(row);
            if norm < MIN_NORM {
                return Err(Error::ZeroVector { row: i });
            }
            row.iter_mut().for_each(|v| *v /= norm);
        }
        Ok(EmbeddingMatrix(out))
    }
}

/// Which metric produced a [`DistanceMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetricTag {
    Euclidean,
    Cosine,
    EulerCosine,
    Jaccard,
    Custom,
}

/// Pairwise distances; every entry is finite and non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    data: Matrix,
    metric: MetricTag,
}

impl DistanceMatrix {
    pub fn new(data: Matrix, metric: MetricTag) -> Result<Self> {
        if let Some(v) = data.data.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidConfig(format!(
                "distance entries must be finite and non-negative, found {v}"
            )));
        }
        Ok(DistanceMatrix { data, metric })
    }

    pub fn rows(&self) -> usize {
        self.data.rows
    }

    pub fn cols(&self) -> usize {
        self.data.cols
    }

    pub fn is_square(&self) -> bool {
        self.data.rows == self.data.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data.get(i, j)
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        self.data.row(i)
    }

    pub fn metric(&self) -> MetricTag {
        self.metric
    }

    pub fn matrix(&self) -> &Matrix {
        &self.data
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn l2_norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `1 - cos(a, b)`, in `[0, 2]`.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dims(a, b)?;
    let na = l2_norm(a);
    let nb = l2_norm(b);
    if na < MIN_NORM {
        return Err(Error::ZeroVector { row: 0 });
    }
    if nb < MIN_NORM {
        return Err(Error::ZeroVector { row: 1 });
    }
    Ok((1.0 - dot(a, b) / (na * nb)).clamp(0.0, 2.0))
}

/// Square matrix of Euclidean distances between the rows of `m`.
pub fn euclidean_distances(m: &EmbeddingMatrix) -> DistanceMatrix {
    let n = m.n();
    let mut out = Matrix::zeros(n, n);
    par::fill_rows(out.as_mut_slice(), n, |i, row| {
        for (j, v) in row.iter_mut().enumerate() {
            // Sorting the pair fixes the summation order, so the matrix is
            // exactly symmetric.
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            *v = if a == b { 0.0 } else { euclidean(m.row(a), m.row(b)) };
        }
    });
    DistanceMatrix {
        data: out,
        metric: MetricTag::Euclidean,
    }
}

/// Elementwise `sim = exp(-dist)` and `disc = 1 - sim`.
pub fn pairwise_sim_disc(dist: &DistanceMatrix) -> (Matrix, Matrix) {
    let sim = dist.data.map(|d| (-d).exp());
    let disc = sim.map(|s| 1.0 - s);
    (sim, disc)
}

/// Default coordinate frequency of the Euler representation.
pub const DEFAULT_EULER_ALPHA: f64 = 1.9;

/// Cosine distance between the Euler representations of `a` and `b`.
///
/// Each coordinate `x` maps to `(cos(alpha*pi*x), sin(alpha*pi*x)) / sqrt(D)`,
/// so both mapped vectors have unit norm and their inner product reduces to
/// the mean of `cos(alpha*pi*(a_j - b_j))`.
pub fn euler_cosine_distance(a: &[f64], b: &[f64], alpha: f64) -> Result<f64> {
    check_dims(a, b)?;
    if !(alpha > 0.0) {
        return Err(Error::InvalidConfig(format!("alpha must be > 0, got {alpha}")));
    }
    Ok(euler_cosine_unchecked(a, b, alpha))
}

#[inline]
pub(crate) fn euler_cosine_unchecked(a: &[f64], b: &[f64], alpha: f64) -> f64 {
    let scale = alpha * PI;
    let s: f64 = a.iter().zip(b).map(|(x, y)| (scale * (x - y)).cos()).sum();
    (1.0 - s / a.len() as f64).clamp(0.0, 2.0)
}

fn check_dims(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(())
}
