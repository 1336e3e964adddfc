//! Dense batched matrices of ring elements.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::ring::{FixedPointConfig, RingElement};

/// `batch` stacked `rows x cols` matrices. Vectors are `(1, n, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Shape {
    pub batch: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Shape {
    pub const fn new(batch: usize, rows: usize, cols: usize) -> Self {
        Shape { batch, rows, cols }
    }

    pub const fn scalar() -> Self {
        Shape::new(1, 1, 1)
    }

    pub const fn vector(n: usize) -> Self {
        Shape::new(1, n, 1)
    }

    pub const fn matrix(rows: usize, cols: usize) -> Self {
        Shape::new(1, rows, cols)
    }

    pub const fn len(&self) -> usize {
        self.batch * self.rows * self.cols
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub const fn matrix_len(&self) -> usize {
        self.rows * self.cols
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RingTensor {
    shape: Shape,
    data: Vec<RingElement>,
}

impl RingTensor {
    pub fn zeros(shape: Shape) -> Self {
        RingTensor {
            shape,
            data: vec![RingElement::ZERO; shape.len()],
        }
    }

    pub fn from_vec(shape: Shape, data: Vec<RingElement>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::Shape(format!(
                "{} elements do not fit {:?}",
                data.len(),
                shape
            )));
        }
        Ok(RingTensor { shape, data })
    }

    pub fn vector(data: Vec<RingElement>) -> Self {
        RingTensor {
            shape: Shape::vector(data.len()),
            data,
        }
    }

    pub fn from_u64(shape: Shape, words: Vec<u64>) -> Result<Self> {
        Self::from_vec(shape, words.into_iter().map(RingElement).collect())
    }

    /// Encodes reals element-wise.
    pub fn encode(shape: Shape, xs: &[f64], fx: FixedPointConfig) -> Result<Self> {
        Self::from_vec(shape, fx.encode_all(xs)?)
    }

    pub fn decode(&self, fx: FixedPointConfig) -> Vec<f64> {
        fx.decode_all(&self.data)
    }

    /// Identity matrices of size `n`, repeated `batch` times, scaled by `one`.
    pub fn identity(batch: usize, n: usize, one: RingElement) -> Self {
        let mut t = RingTensor::zeros(Shape::new(batch, n, n));
        for b in 0..batch {
            for i in 0..n {
                t.data[b * n * n + i * n + i] = one;
            }
        }
        t
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[RingElement] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [RingElement] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<RingElement> {
        self.data
    }

    pub fn to_u64(&self) -> Vec<u64> {
        self.data.iter().map(|e| e.0).collect()
    }

    /// Same data, new shape with the same element count.
    pub fn reshape(mut self, shape: Shape) -> Result<Self> {
        if shape.len() != self.data.len() {
            return Err(Error::Shape(format!(
                "cannot reshape {:?} into {:?}",
                self.shape, shape
            )));
        }
        self.shape = shape;
        Ok(self)
    }

    fn check_same(&self, other: &RingTensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::Shape(format!(
                "{:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &RingTensor) -> Result<RingTensor> {
        self.check_same(other)?;
        Ok(self.zip_map(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &RingTensor) -> Result<RingTensor> {
        self.check_same(other)?;
        Ok(self.zip_map(other, |a, b| a - b))
    }

    pub fn add_assign(&mut self, other: &RingTensor) -> Result<()> {
        self.check_same(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
        Ok(())
    }

    pub fn sub_assign(&mut self, other: &RingTensor) -> Result<()> {
        self.check_same(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a -= *b;
        }
        Ok(())
    }

    /// Element-wise product, no rescaling.
    pub fn hadamard(&self, other: &RingTensor) -> Result<RingTensor> {
        self.check_same(other)?;
        Ok(self.zip_map(other, |a, b| a * b))
    }

    pub fn scale(&self, k: RingElement) -> RingTensor {
        self.map(|a| a * k)
    }

    pub fn neg(&self) -> RingTensor {
        self.map(|a| -a)
    }

    pub fn map(&self, f: impl Fn(RingElement) -> RingElement) -> RingTensor {
        RingTensor {
            shape: self.shape,
            data: self.data.iter().map(|&a| f(a)).collect(),
        }
    }

    fn zip_map(
        &self,
        other: &RingTensor,
        f: impl Fn(RingElement, RingElement) -> RingElement,
    ) -> RingTensor {
        RingTensor {
            shape: self.shape,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Batched ring matrix product (wrapping, no rescaling).
    pub fn matmul(&self, other: &RingTensor) -> Result<RingTensor> {
        let (l, r) = (self.shape, other.shape);
        if l.batch != r.batch || l.cols != r.rows {
            return Err(Error::Shape(format!("cannot multiply {:?} by {:?}", l, r)));
        }
        let out_shape = Shape::new(l.batch, l.rows, r.cols);
        let mut out = vec![RingElement::ZERO; out_shape.len()];
        let (m, k, n) = (l.rows, l.cols, r.cols);
        for b in 0..l.batch {
            let lhs = &self.data[b * m * k..(b + 1) * m * k];
            let rhs = &other.data[b * k * n..(b + 1) * k * n];
            let dst = &mut out[b * m * n..(b + 1) * m * n];
            for i in 0..m {
                for t in 0..k {
                    let a = lhs[i * k + t];
                    if a.0 == 0 {
                        continue;
                    }
                    let row = &rhs[t * n..(t + 1) * n];
                    let acc = &mut dst[i * n..(i + 1) * n];
                    for (d, &bv) in acc.iter_mut().zip(row) {
                        *d += a * bv;
                    }
                }
            }
        }
        Ok(RingTensor {
            shape: out_shape,
            data: out,
        })
    }

    /// Swaps rows and columns of every matrix in the batch.
    pub fn transpose(&self) -> RingTensor {
        let s = self.shape;
        let mut out = vec![RingElement::ZERO; s.len()];
        for b in 0..s.batch {
            let base = b * s.rows * s.cols;
            for i in 0..s.rows {
                for j in 0..s.cols {
                    out[base + j * s.rows + i] = self.data[base + i * s.cols + j];
                }
            }
        }
        RingTensor {
            shape: Shape::new(s.batch, s.cols, s.rows),
            data: out,
        }
    }

    /// Concatenates tensors along the flat data, producing a vector.
    pub fn concat(parts: &[&RingTensor]) -> RingTensor {
        RingTensor::vector(parts.iter().flat_map(|t| t.data.iter().copied()).collect())
    }
}

impl Index<usize> for RingTensor {
    type Output = RingElement;
    fn index(&self, i: usize) -> &RingElement {
        &self.data[i]
    }
}

impl IndexMut<usize> for RingTensor {
    fn index_mut(&mut self, i: usize) -> &mut RingElement {
        &mut self.data[i]
    }
}
