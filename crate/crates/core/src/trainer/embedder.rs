//! Linear embedder `f = W x / |W x|` trained with Adam.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::Embed;
use crate::error::{Error, Result};
use crate::metric::{dot, l2_norm, Matrix, MIN_NORM};

/// Leading bytes of a model file.
pub const MODEL_MAGIC: &[u8; 8] = b"RLEMB\x00\x00\x01";

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearEmbedder {
    w: Matrix,
    adam: AdamState,
}

/// What the backward pass needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub z: Vec<f64>,
    pub norm: f64,
}

impl LinearEmbedder {
    pub fn from_weights(w: Matrix) -> Result<Self> {
        if w.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("embedder weights"));
        }
        if w.rows() == 0 || w.cols() == 0 {
            return Err(Error::InvalidConfig("embedder needs non-empty weights".into()));
        }
        let len = w.rows() * w.cols();
        Ok(LinearEmbedder {
            w,
            adam: AdamState {
                m: vec![0.0; len],
                v: vec![0.0; len],
                step: 0,
            },
        })
    }

    pub fn identity(d: usize) -> Self {
        let mut w = Matrix::zeros(d, d);
        for i in 0..d {
            w.set(i, i, 1.0);
        }
        Self::from_weights(w).expect("identity is finite")
    }

    /// Random projection with orthonormal rows (or columns when
    /// `d_out > d_in`).
    pub fn orthogonal(d_out: usize, d_in: usize, seed: u64) -> Result<Self> {
        if d_out == 0 || d_in == 0 {
            return Err(Error::InvalidConfig("embedder dimensions must be >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (count, len) = if d_out <= d_in { (d_out, d_in) } else { (d_in, d_out) };
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(count);
        while basis.len() < count {
            let mut v: Vec<f64> = (0..len).map(|_| StandardNormal.sample(&mut rng)).collect();
            for b in &basis {
                let p = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
            let n = l2_norm(&v);
            if n > 1e-8 {
                v.iter_mut().for_each(|x| *x /= n);
                basis.push(v);
            }
        }
        let mut w = Matrix::zeros(d_out, d_in);
        for (a, b) in basis.iter().enumerate() {
            for (c, &v) in b.iter().enumerate() {
                if d_out <= d_in {
                    w.set(a, c, v);
                } else {
                    w.set(c, a, v);
                }
            }
        }
        Self::from_weights(w)
    }

    pub fn d_in(&self) -> usize {
        self.w.cols()
    }

    pub fn d_out(&self) -> usize {
        self.w.rows()
    }

    pub fn weights(&self) -> &Matrix {
        &self.w
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        if x.len() != self.d_in() {
            return Err(Error::DimensionMismatch {
                expected: self.d_in(),
                found: x.len(),
            });
        }
        let z: Vec<f64> = self.w.iter_rows().map(|r| dot(r, x)).collect();
        let norm = l2_norm(&z);
        if !norm.is_finite() {
            return Err(Error::NonFinite("embedding"));
        }
        if norm < MIN_NORM {
            return Err(Error::ZeroVector { row: 0 });
        }
        let f = z.iter().map(|v| v / norm).collect();
        Ok((f, ForwardCache { z, norm }))
    }

    /// Adds `d loss / d W` for one sample to `grad_w`, given the gradient
    /// with respect to the normalised output `f`.
    pub fn accumulate_grad(x: &[f64], f: &[f64], cache: &ForwardCache, grad_f: &[f64], grad_w: &mut Matrix) {
        let proj = dot(f, grad_f);
        for (r, (&gf, &fv)) in grad_f.iter().zip(f).enumerate() {
            let gz = (gf - fv * proj) / cache.norm;
            for (g, &xv) in grad_w.row_mut(r).iter_mut().zip(x) {
                *g += gz * xv;
            }
        }
    }

    /// One Adam step on `grad + weight_decay * W`.
    pub fn adam_step(&mut self, grad: &Matrix, lr: f64, weight_decay: f64) -> Result<()> {
        if grad.rows() != self.w.rows() || grad.cols() != self.w.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.w.rows() * self.w.cols(),
                found: grad.rows() * grad.cols(),
            });
        }
        if grad.as_slice().iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("gradient"));
        }
        let st = &mut self.adam;
        st.step += 1;
        let c1 = 1.0 - BETA1.powi(st.step);
        let c2 = 1.0 - BETA2.powi(st.step);
        let w = self.w.as_mut_slice();
        for (i, (wv, &g)) in w.iter_mut().zip(grad.as_slice()).enumerate() {
            let g = g + weight_decay * *wv;
            st.m[i] = BETA1 * st.m[i] + (1.0 - BETA1) * g;
            st.v[i] = BETA2 * st.v[i] + (1.0 - BETA2) * g * g;
            let mh = st.m[i] / c1;
            let vh = st.v[i] / c2;
            *wv -= lr * mh / (vh.sqrt() + ADAM_EPS);
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("embedder weights"));
        }
        Ok(())
    }

    /// Writes the weights: magic, `d_out` and `d_in` as little-endian u64,
    /// then row-major little-endian f64 values.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(MODEL_MAGIC)?;
        out.write_all(&(self.d_out() as u64).to_le_bytes())?;
        out.write_all(&(self.d_in() as u64).to_le_bytes())?;
        for v in self.w.as_slice() {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != MODEL_MAGIC {
            return Err(Error::BadModel("bad model magic bytes".into()));
        }
        let mut word = [0u8; 8];
        input.read_exact(&mut word)?;
        let rows = u64::from_le_bytes(word) as usize;
        input.read_exact(&mut word)?;
        let cols = u64::from_le_bytes(word) as usize;
        let len = rows.checked_mul(cols).ok_or_else(|| Error::BadModel("model dimensions overflow".into()))?;
        let mut data = Vec::with_capacity(len.min(1 << 24));
        for _ in 0..len {
            input.read_exact(&mut word)?;
            data.push(f64::from_le_bytes(word));
        }
        let mut rest = Vec::new();
        input.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(Error::BadModel(format!("{} trailing bytes after weights", rest.len())));
        }
        Self::from_weights(Matrix::from_vec(rows, cols, data)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

impl Embed for LinearEmbedder {
    fn embed(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(x)?.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    #[test]
    fn identity_keeps_unit_inputs() {
        let e = LinearEmbedder::identity(3);
        let (f, _) = e.forward(&[0.6, 0.0, 0.8]).unwrap();
        assert_eq!(f, vec![0.6, 0.0, 0.8]);
    }

    #[test]
    fn output_is_scale_invariant() {
        let mut w = Matrix::zeros(3, 3);
        for i in 0..3 {
            w.set(i, i, 2.0);
        }
        let doubled = LinearEmbedder::from_weights(w).unwrap();
        let x = [0.3, -1.2, 0.5];
        let (a, _) = doubled.forward(&x).unwrap();
        let (b, _) = LinearEmbedder::identity(3).forward(&x).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert_abs_diff_eq!(p, q, epsilon = 1e-15);
        }
    }

    #[test]
    fn random_projection_outputs_unit_vectors() {
        let e = LinearEmbedder::orthogonal(4, 7, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let x: Vec<f64> = (0..7).map(|_| rng.random::<f64>() - 0.5).collect();
            let (f, _) = e.forward(&x).unwrap();
            assert!((l2_norm(&f) - 1.0).abs() < 1e-9);
        }
        for a in 0..4 {
            for b in 0..4 {
                let d = dot(e.weights().row(a), e.weights().row(b));
                assert_abs_diff_eq!(d, if a == b { 1.0 } else { 0.0 }, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn zero_projection_is_rejected() {
        let e = LinearEmbedder::identity(2);
        assert!(matches!(e.forward(&[0.0, 0.0]), Err(Error::ZeroVector { .. })));
    }

    #[test]
    fn zero_gradient_without_decay_leaves_weights() {
        let mut e = LinearEmbedder::orthogonal(3, 3, 4).unwrap();
        let before = e.weights().clone();
        e.adam_step(&Matrix::zeros(3, 3), 1e-3, 0.0).unwrap();
        assert_eq!(e.weights(), &before);
    }

    #[test]
    fn weight_decay_shrinks_norm() {
        let mut e = LinearEmbedder::orthogonal(3, 5, 8).unwrap();
        let mut last = l2_norm(e.weights().as_slice());
        for _ in 0..10 {
            e.adam_step(&Matrix::zeros(3, 5), 1e-3, 5e-4).unwrap();
            let n = l2_norm(e.weights().as_slice());
            assert!(n < last);
            last = n;
        }
    }

    #[test]
    fn non_finite_gradient_is_rejected() {
        let mut e = LinearEmbedder::identity(2);
        let mut g = Matrix::zeros(2, 2);
        g.set(0, 1, f64::NAN);
        assert!(matches!(e.adam_step(&g, 1e-3, 0.0), Err(Error::NonFinite(_))));
    }

    #[test]
    fn model_file_round_trip_and_bad_magic() {
        let e = LinearEmbedder::orthogonal(2, 3, 5).unwrap();
        let mut buf = Vec::new();
        e.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 16 + 6 * 8);
        let back = LinearEmbedder::read_from(buf.as_slice()).unwrap();
        assert_eq!(back.weights(), e.weights());
        buf[0] ^= 0xff;
        assert!(matches!(LinearEmbedder::read_from(buf.as_slice()), Err(Error::BadModel(_))));
    }
}
