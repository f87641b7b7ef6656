//! Dense 4-D tensors in NCHW layout.

use crate::scalar::Scalar;
use crate::{NnError, Result};

/// Shape of a [`Tensor4`]: (batch, channels, height, width).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape4 {
    pub n: usize,
    pub c: usize,
    pub h: usize,
    pub w: usize,
}

impl Shape4 {
    pub fn new(n: usize, c: usize, h: usize, w: usize) -> Self {
        Shape4 { n, c, h, w }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.c * self.h * self.w
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Elements per sample.
    #[inline]
    pub fn sample_len(&self) -> usize {
        self.c * self.h * self.w
    }
}

impl std::fmt::Display for Shape4 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}x{}", self.n, self.c, self.h, self.w)
    }
}

/// Row-major NCHW tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4<S> {
    shape: Shape4,
    data: Vec<S>,
}

impl<S: Scalar> Tensor4<S> {
    pub fn zeros(shape: Shape4) -> Self {
        Tensor4 {
            shape,
            data: vec![S::ZERO; shape.len()],
        }
    }

    pub fn from_vec(shape: Shape4, data: Vec<S>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(NnError::ShapeMismatch(format!(
                "tensor data length {} does not match shape {} ({} elements)",
                data.len(),
                shape,
                shape.len()
            )));
        }
        Ok(Tensor4 { shape, data })
    }

    #[inline]
    pub fn shape(&self) -> Shape4 {
        self.shape
    }

    #[inline]
    pub fn data(&self) -> &[S] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<S> {
        self.data
    }

    /// Flat index of (n, c, y, x).
    #[inline]
    pub fn idx(&self, n: usize, c: usize, y: usize, x: usize) -> usize {
        ((n * self.shape.c + c) * self.shape.h + y) * self.shape.w + x
    }

    #[inline]
    pub fn at(&self, n: usize, c: usize, y: usize, x: usize) -> S {
        self.data[self.idx(n, c, y, x)]
    }

    #[inline]
    pub fn set(&mut self, n: usize, c: usize, y: usize, x: usize, v: S) {
        let i = self.idx(n, c, y, x);
        self.data[i] = v;
    }

    /// Contiguous view of one sample.
    #[inline]
    pub fn sample(&self, n: usize) -> &[S] {
        let len = self.shape.sample_len();
        &self.data[n * len..(n + 1) * len]
    }

    #[inline]
    pub fn sample_mut(&mut self, n: usize) -> &mut [S] {
        let len = self.shape.sample_len();
        &mut self.data[n * len..(n + 1) * len]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn fill(&mut self, v: S) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    /// Elementwise conversion to another scalar width.
    pub fn cast<T: Scalar>(&self) -> Tensor4<T> {
        Tensor4 {
            shape: self.shape,
            data: self.data.iter().map(|v| T::from_f64(v.to_f64())).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_is_row_major_nchw() {
        let shape = Shape4::new(2, 3, 4, 5);
        let t = Tensor4::<f32>::zeros(shape);
        assert_eq!(t.idx(0, 0, 0, 0), 0);
        assert_eq!(t.idx(0, 0, 0, 1), 1);
        assert_eq!(t.idx(0, 0, 1, 0), 5);
        assert_eq!(t.idx(0, 1, 0, 0), 20);
        assert_eq!(t.idx(1, 0, 0, 0), 60);
        assert_eq!(t.shape().len(), 120);
    }

    #[test]
    fn from_vec_rejects_bad_length() {
        let shape = Shape4::new(1, 1, 2, 2);
        assert!(Tensor4::<f32>::from_vec(shape, vec![0.0; 3]).is_err());
        assert!(Tensor4::<f32>::from_vec(shape, vec![0.0; 4]).is_ok());
    }

    #[test]
    fn finite_detection() {
        let shape = Shape4::new(1, 1, 1, 3);
        let mut t = Tensor4::<f32>::from_vec(shape, vec![1.0, 2.0, 3.0]).unwrap();
        assert!(t.all_finite());
        t.data_mut()[1] = f32::NAN;
        assert!(!t.all_finite());
    }
}
