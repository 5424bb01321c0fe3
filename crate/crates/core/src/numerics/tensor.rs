use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major array of `f64`.
///
/// Two-dimensional tensors are treated as `rows x cols` matrices by the
/// matrix-vector helpers; one-dimensional tensors are plain vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(Error::Config(format!(
                "tensor data length {} does not match shape {:?}",
                data.len(),
                shape
            )));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    /// Uniform values in `[-scale, scale]`.
    pub fn uniform<R: Rng + ?Sized>(shape: &[usize], scale: f64, rng: &mut R) -> Self {
        let n = shape.iter().product();
        let data = (0..n).map(|_| rng.gen_range(-scale..=scale)).collect();
        Self {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.shape)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        if self.shape.len() > 1 {
            self.shape[1]
        } else {
            1
        }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.data[r * c..(r + 1) * c]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let c = self.cols();
        &mut self.data[r * c..(r + 1) * c]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|v| *v = value);
    }

    /// `out += self * x`.
    pub fn matvec_add(&self, x: &[f64], out: &mut [f64]) {
        let cols = self.cols();
        debug_assert_eq!(x.len(), cols);
        debug_assert_eq!(out.len(), self.rows());
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(cols)) {
            *o += dot(row, x);
        }
    }

    /// `out += self^T * g`.
    pub fn matvec_t_add(&self, g: &[f64], out: &mut [f64]) {
        let cols = self.cols();
        debug_assert_eq!(g.len(), self.rows());
        debug_assert_eq!(out.len(), cols);
        for (&gi, row) in g.iter().zip(self.data.chunks_exact(cols)) {
            if gi == 0.0 {
                continue;
            }
            for (o, &w) in out.iter_mut().zip(row) {
                *o += gi * w;
            }
        }
    }

    /// `self += g x^T`.
    pub fn add_outer(&mut self, g: &[f64], x: &[f64]) {
        let cols = self.cols();
        debug_assert_eq!(g.len(), self.rows());
        debug_assert_eq!(x.len(), cols);
        for (&gi, row) in g.iter().zip(self.data.chunks_exact_mut(cols)) {
            if gi == 0.0 {
                continue;
            }
            for (w, &xj) in row.iter_mut().zip(x) {
                *w += gi * xj;
            }
        }
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &Tensor, scale: f64) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }

    pub fn add_slice(&mut self, values: &[f64]) {
        debug_assert_eq!(self.data.len(), values.len());
        for (a, b) in self.data.iter_mut().zip(values) {
            *a += b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn sum_squares(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
